use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use rand::Rng;

use crate::channels::{choi_from_kraus, is_cptp, random_cptp, spanning_states, Channel, KrausSet};
use crate::error::{Error, Result};
use crate::tensorcore::{derive_seed, lstsq_real, rng_from_seed, ComplexMatrix, WireSystem, C64, ONE, ZERO};

/// Largest Choi dimension `Π d_k²` for which product bases are enumerated.
pub const MAX_BASIS_CHOI_DIM: usize = 81;

/// `(input label, output label)` for each party.
pub type Partition = Vec<(String, String)>;

/// Max over parties of `‖Tr_{out_k} J − I_{in_k}/d_k ⊗ Tr_{in_k,out_k} J‖_F`.
pub fn nonsignalling_defect<S: AsRef<str>>(choi: &ComplexMatrix, parties: &[(S, S)]) -> Result<f64> {
    check_partition(choi.system(), parties)?;
    let mut worst = 0.0f64;
    for (i, o) in parties {
        let (i, o) = (i.as_ref(), o.as_ref());
        let marginal = choi.partial_trace(&[o])?;
        let rest = choi.partial_trace(&[i, o])?;
        let d = choi.system().dim_of(i)?;
        let id = ComplexMatrix::identity(WireSystem::single(i, d)?).scale_real(1.0 / d as f64);
        let expected = id.tensor_product(&rest)?.permute_systems(marginal.system().labels())?;
        worst = worst.max(marginal.frobenius_distance(&expected)?);
    }
    Ok(worst)
}

/// `‖Tr_outs J − I_ins‖_F` for a Choi matrix split into the given wires.
pub fn trace_preservation_defect<S: AsRef<str>>(choi: &ComplexMatrix, outs: &[S]) -> Result<f64> {
    let reduced = choi.partial_trace(outs)?;
    let d = reduced.dim();
    Ok((reduced.data() - DMatrix::<C64>::identity(d, d)).norm())
}

fn check_partition<S: AsRef<str>>(sys: &WireSystem, parties: &[(S, S)]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for (i, o) in parties {
        for l in [i.as_ref(), o.as_ref()] {
            if !sys.contains(l) || seen.contains(&l) {
                return Err(Error::BadPartition);
            }
            seen.push(l);
        }
    }
    if seen.len() != sys.len() {
        return Err(Error::BadPartition);
    }
    Ok(())
}

/// Non-signalling test for a channel whose wires are split into parties.
pub fn is_nonsignalling(n: &Channel, parties: &[(String, String)], tol: f64) -> Result<bool> {
    Ok(nonsignalling_defect(n.choi(), parties)? <= tol)
}

/// A multipartite channel certified non-signalling (and CPTP) at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct NSChannel {
    channel: Channel,
    parties: Partition,
}

impl NSChannel {
    pub fn new(channel: Channel, parties: Partition, tol: f64) -> Result<Self> {
        if !is_cptp(&channel, tol) {
            return Err(Error::NotCptp);
        }
        let defect = nonsignalling_defect(channel.choi(), &parties)?;
        if defect > tol {
            return Err(Error::Signalling(defect));
        }
        Ok(Self { channel, parties })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn parties(&self) -> &Partition {
        &self.parties
    }

    pub fn party_dims(&self) -> Vec<usize> {
        self.parties
            .iter()
            .map(|(i, _)| self.channel.choi().system().dim_of(i).expect("validated"))
            .collect()
    }

    /// Choi matrix reordered as `(in_0, out_0, in_1, out_1, ..)`.
    pub fn interleaved_choi(&self) -> Result<ComplexMatrix> {
        let order: Vec<&str> = self
            .parties
            .iter()
            .flat_map(|(i, o)| [i.as_str(), o.as_str()])
            .collect();
        self.channel.choi().permute_systems(&order)
    }
}

type BasisCache = Mutex<HashMap<usize, Arc<Vec<DMatrix<C64>>>>>;

fn cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Number of affinely independent CPTP d→d Choi matrices spanning the CPTP set.
pub fn local_basis_size(d: usize) -> usize {
    d.pow(4) - d.pow(2) + 1
}

/// Choi matrices (on `in ⊗ out`) of d→d channels whose affine hull is the
/// full CPTP affine hull: identity, Weyl unitaries, axis rotations and
/// measure-prepare channels, greedily pruned by rank.
pub fn local_cptp_basis(d: usize) -> Result<Arc<Vec<DMatrix<C64>>>> {
    if d < 1 {
        return Err(Error::InvalidDimension(format!("party dimension {d}")));
    }
    if let Some(b) = cache().lock().expect("basis cache").get(&d) {
        return Ok(b.clone());
    }
    let built = Arc::new(build_local_basis(d)?);
    cache().lock().expect("basis cache").insert(d, built.clone());
    Ok(built)
}

fn build_local_basis(d: usize) -> Result<Vec<DMatrix<C64>>> {
    let target = local_basis_size(d);
    let mut chosen: Vec<DMatrix<C64>> = Vec::with_capacity(target);
    let mut ortho: Vec<DVector<C64>> = Vec::with_capacity(target);
    let mut offer = |choi: DMatrix<C64>, chosen: &mut Vec<DMatrix<C64>>| {
        if chosen.len() == target {
            return;
        }
        let mut v = DVector::from_iterator(choi.len(), choi.iter().cloned());
        for q in &ortho {
            let c = q.dotc(&v);
            v -= q * c;
        }
        let n = v.norm();
        if n > 1e-8 {
            ortho.push(v / C64::new(n, 0.0));
            chosen.push(choi);
        }
    };

    for u in candidate_unitaries(d) {
        offer(unitary_choi(&u), &mut chosen);
    }
    let states = spanning_states(d);
    let projectors: Vec<DMatrix<C64>> = states
        .iter()
        .map(|v| DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()))
        .collect();
    let id = DMatrix::<C64>::identity(d, d);
    'outer: for p in &projectors {
        for w in &projectors {
            for w2 in &projectors {
                if chosen.len() == target {
                    break 'outer;
                }
                // measure {P, I-P}, prepare w or w2
                let choi = p.transpose().kronecker(w) + (&id - p).transpose().kronecker(w2);
                offer(choi, &mut chosen);
            }
        }
    }
    if chosen.len() != target {
        return Err(Error::InsufficientBasis(chosen.len() as f64));
    }
    Ok(chosen)
}

fn unitary_choi(u: &DMatrix<C64>) -> DMatrix<C64> {
    let d = u.nrows();
    let (i, o) = crate::channels::default_systems(&[d], &[d]).expect("valid dims");
    let k = KrausSet::from_data(vec![u.clone()], i, o).expect("square unitary");
    choi_from_kraus(&k).expect("valid Kraus").choi().data().clone()
}

/// Identity, clock/shift products and rotations `exp(-iθ(|j⟩⟨k| + h.c.))`.
fn candidate_unitaries(d: usize) -> Vec<DMatrix<C64>> {
    let mut out = vec![DMatrix::identity(d, d)];
    let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
    let shift = DMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO });
    let clock = DMatrix::from_fn(d, d, |i, j| if i == j { omega.powu(i as u32) } else { ZERO });
    for a in 0..d {
        for b in 0..d {
            if a + b == 0 {
                continue;
            }
            let mut u = DMatrix::identity(d, d);
            for _ in 0..a {
                u = &shift * u;
            }
            for _ in 0..b {
                u = &clock * u;
            }
            out.push(u);
        }
    }
    let angles = [
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::PI,
        std::f64::consts::SQRT_2,
        std::f64::consts::E / 3.0,
    ];
    for j in 0..d {
        for k in (j + 1)..d {
            for &theta in &angles {
                for imag in [false, true] {
                    let mut u = DMatrix::<C64>::identity(d, d);
                    let (c, s) = (theta.cos(), theta.sin());
                    u[(j, j)] = C64::new(c, 0.0);
                    u[(k, k)] = C64::new(c, 0.0);
                    if imag {
                        u[(j, k)] = C64::new(0.0, -s);
                        u[(k, j)] = C64::new(0.0, -s);
                    } else {
                        u[(j, k)] = C64::new(-s, 0.0);
                        u[(k, j)] = C64::new(s, 0.0);
                    }
                    out.push(u);
                }
            }
        }
    }
    out
}

/// Tensor products of local bases, one local factor per party.
///
/// Element data is laid out as `(in_0, out_0, in_1, out_1, ..)`.
#[derive(Clone, Debug)]
pub struct ProductBasis {
    dims: Vec<usize>,
    locals: Vec<Arc<Vec<DMatrix<C64>>>>,
}

impl ProductBasis {
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_bound(dims, MAX_BASIS_CHOI_DIM)
    }

    pub fn with_bound(dims: &[usize], bound: usize) -> Result<Self> {
        let choi_dim: usize = dims.iter().map(|d| d * d).product();
        if choi_dim > bound {
            return Err(Error::BoundExceeded(format!(
                "Choi dimension {choi_dim} for parties {dims:?} exceeds {bound}"
            )));
        }
        let locals = dims.iter().map(|&d| local_cptp_basis(d)).collect::<Result<_>>()?;
        Ok(Self {
            dims: dims.to_vec(),
            locals,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.locals.iter().map(|l| l.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn choi_dim(&self) -> usize {
        self.dims.iter().map(|d| d * d).product()
    }

    /// Element `index` in mixed radix, first party most significant.
    pub fn element(&self, index: usize) -> DMatrix<C64> {
        let mut digits = vec![0; self.locals.len()];
        let mut rest = index;
        for (k, l) in self.locals.iter().enumerate().rev() {
            digits[k] = rest % l.len();
            rest /= l.len();
        }
        let mut m = DMatrix::from_element(1, 1, ONE);
        for (k, l) in self.locals.iter().enumerate() {
            m = m.kronecker(&l[digits[k]]);
        }
        m
    }
}

/// Product channels whose Choi matrices affinely span the non-signalling
/// channels on parties of the given dimensions (`d_k → d_k` each).
///
/// Channels use wires `i{k}` → `o{k}`.
pub fn nonsignalling_affine_basis(parties: &[usize]) -> Result<Vec<Channel>> {
    let basis = ProductBasis::new(parties)?;
    let sys = interleaved_system(parties)?;
    let (i, o) = crate::channels::default_systems(parties, parties)?;
    (0..basis.len())
        .map(|idx| {
            let m = ComplexMatrix::square(basis.element(idx), sys.clone())?;
            Channel::from_choi(m, i.clone(), o.clone())
        })
        .collect()
}

fn interleaved_system(parties: &[usize]) -> Result<WireSystem> {
    let mut dims = Vec::new();
    let mut labels = Vec::new();
    for (k, &d) in parties.iter().enumerate() {
        dims.extend([d, d]);
        labels.push(format!("i{k}"));
        labels.push(format!("o{k}"));
    }
    WireSystem::new(dims, labels)
}

/// Residual tolerance used to accept a reconstruction.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

/// Affine coefficients over the product basis reconstructing `n`.
///
/// Returns `(coefficient, product channel)` for every basis element with a
/// nonzero weight; the weights sum to one.
pub fn decompose_nonsignalling(n: &NSChannel) -> Result<Vec<(f64, Channel)>> {
    let dims = n.party_dims();
    let basis = ProductBasis::new(&dims)?;
    let target = n.interleaved_choi()?;
    let (coeffs, residual) = affine_fit(&basis, target.data())?;
    if residual > DECOMPOSITION_TOL {
        return Err(Error::InsufficientBasis(residual));
    }
    let sys = target.system().clone();
    let (in_sys, out_sys) = (n.channel().in_sys().clone(), n.channel().out_sys().clone());
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > 1e-12)
        .map(|(idx, &c)| {
            let m = ComplexMatrix::square(basis.element(idx), sys.clone())?;
            Ok((c, Channel::from_choi(m, in_sys.clone(), out_sys.clone())?))
        })
        .collect()
}

/// Decomposes an arbitrary channel, reporting signalling inputs distinctly.
pub fn decompose_channel(
    channel: &Channel,
    parties: &[(String, String)],
    tol: f64,
) -> Result<Vec<(f64, Channel)>> {
    let ns = NSChannel::new(channel.clone(), parties.to_vec(), tol)?;
    decompose_nonsignalling(&ns)
}

/// `‖Σ cᵢ J(fᵢ) − J(n)‖_F` for a decomposition returned by [`decompose_nonsignalling`].
pub fn reconstruction_residual(n: &NSChannel, terms: &[(f64, Channel)]) -> Result<f64> {
    let target = n.channel().choi();
    let mut acc = DMatrix::<C64>::zeros(target.dim(), target.dim());
    for (c, f) in terms {
        if f.choi().system() != target.system() {
            return Err(Error::TypeMismatch("decomposition term on different wires".into()));
        }
        acc += f.choi().data() * C64::new(*c, 0.0);
    }
    Ok((acc - target.data()).norm())
}

/// A random convex mixture of `terms` product channels on parties `i{k} → o{k}`.
pub fn random_nonsignalling_channel(dims: &[usize], terms: usize, seed: u64) -> Result<NSChannel> {
    let mut rng = rng_from_seed(seed);
    let weights: Vec<f64> = (0..terms.max(1)).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut mixed: Option<DMatrix<C64>> = None;
    for (t, w) in weights.iter().enumerate() {
        let mut prod = DMatrix::from_element(1, 1, ONE);
        let mut sys = WireSystem::trivial();
        for (k, &d) in dims.iter().enumerate() {
            let f = random_cptp(d, d, d, derive_seed(seed, t as u64 + 1, k as u64))?;
            prod = prod.kronecker(f.choi().data());
            sys = sys.concat(&WireSystem::new(vec![d, d], vec![format!("i{k}"), format!("o{k}")])?)?;
        }
        let (i, o) = crate::channels::default_systems(dims, dims)?;
        let c = Channel::from_choi(ComplexMatrix::square(prod, sys)?, i, o)?;
        let term = c.choi().data() * C64::new(w / total, 0.0);
        mixed = Some(match mixed {
            Some(m) => m + term,
            None => term,
        });
    }
    let (i, o) = crate::channels::default_systems(dims, dims)?;
    let channel = Channel::from_choi_data(mixed.expect("at least one term"), i, o)?;
    let parties = (0..dims.len()).map(|k| (format!("i{k}"), format!("o{k}"))).collect();
    NSChannel::new(channel, parties, 1e-9)
}

/// CNOT as a channel on `i0 i1 → o0 o1` (control on party 0); signals 1 → 0.
pub fn controlled_not() -> Channel {
    let mut u = DMatrix::<C64>::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        u[(r, c)] = ONE;
    }
    let k = KrausSet::from_data(
        vec![u],
        WireSystem::numbered("i", &[2, 2]).expect("labels"),
        WireSystem::numbered("o", &[2, 2]).expect("labels"),
    )
    .expect("square Kraus operator");
    choi_from_kraus(&k).expect("unitary channel")
}

/// Real least squares for `Σ α_k B_k = target` with `Σ α_k = 1`.
fn affine_fit(basis: &ProductBasis, target: &DMatrix<C64>) -> Result<(Vec<f64>, f64)> {
    let m = basis.len();
    let n = target.len();
    let rows = 2 * n + 1;
    let mut a = DMatrix::<f64>::zeros(rows, m);
    for k in 0..m {
        let e = basis.element(k);
        for (r, z) in e.iter().enumerate() {
            a[(r, k)] = z.re;
            a[(n + r, k)] = z.im;
        }
        a[(2 * n, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(rows);
    for (r, z) in target.iter().enumerate() {
        b[r] = z.re;
        b[n + r] = z.im;
    }
    b[2 * n] = 1.0;
    let x = lstsq_real(&a, &b, 1e-10);
    let residual = (&a * &x - &b).norm();
    Ok((x.iter().cloned().collect(), residual))
}
