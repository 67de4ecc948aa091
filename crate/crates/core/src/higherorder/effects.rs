use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nonsignalling::{nonsignalling_defect, trace_preservation_defect, ProductBasis};
use super::types::{HigherOrderMap, HigherOrderType, OUT};
use crate::channels::random_cptp;
use crate::error::{Error, Result};
use crate::tensorcore::{
    derive_seed, haar_density, haar_state, link_product, rng_from_seed, ComplexMatrix, MatrixJson,
    WireSystem, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectFamily {
    PrepDiscard,
    ProcessMatrix,
}

/// A discarding effect on a higher-order type, stored on the type's wires
/// (`p{k}.b`, `p{k}.t`). It acts on a state by `Tr[Wᵀ J]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscardEffect {
    matrix: ComplexMatrix,
    typ: HigherOrderType,
    family: EffectFamily,
}

impl DiscardEffect {
    /// Checks the family invariant at tolerance `tol`.
    pub fn new(matrix: ComplexMatrix, typ: HigherOrderType, family: EffectFamily, tol: f64) -> Result<Self> {
        let matrix = on_type_wires(matrix, &typ)?;
        let ok = match family {
            EffectFamily::PrepDiscard => prep_discard_state(&matrix, &typ, tol).is_some(),
            EffectFamily::ProcessMatrix => is_process_matrix(&matrix, &typ, tol)?,
        };
        if !ok {
            return Err(Error::Precondition(format!("matrix is not a {family:?} effect")));
        }
        Ok(Self { matrix, typ, family })
    }

    /// `ρ_bottoms ⊗ I_tops`, reordered onto the interleaved type wires.
    pub fn prep_discard(rho: &DMatrix<C64>, typ: HigherOrderType) -> Result<Self> {
        if rho.nrows() != typ.dim() || rho.ncols() != typ.dim() {
            return Err(Error::ShapeMismatch("prepared state dimension".into()));
        }
        let bottoms = WireSystem::new(typ.dims().to_vec(), typ.bottoms(""))?;
        let tops = WireSystem::new(typ.dims().to_vec(), typ.tops(""))?;
        let m = ComplexMatrix::square(rho.clone(), bottoms)?.tensor_product(&ComplexMatrix::identity(tops))?;
        let matrix = m.permute_systems(typ.wires("").labels())?;
        Ok(Self {
            matrix,
            typ,
            family: EffectFamily::PrepDiscard,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn typ(&self) -> &HigherOrderType {
        &self.typ
    }

    pub fn family(&self) -> EffectFamily {
        self.family
    }

    pub fn to_json(&self) -> DiscardEffectJson {
        DiscardEffectJson {
            typ: self.typ.clone(),
            family: self.family,
            matrix: self.matrix.to_json(),
        }
    }

    pub fn from_json(j: &DiscardEffectJson, tol: f64) -> Result<Self> {
        Self::new(ComplexMatrix::from_json(&j.matrix)?, j.typ.clone(), j.family, tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardEffectJson {
    #[serde(rename = "type")]
    pub typ: HigherOrderType,
    pub family: EffectFamily,
    pub matrix: MatrixJson,
}

fn on_type_wires(m: ComplexMatrix, typ: &HigherOrderType) -> Result<ComplexMatrix> {
    let sys = typ.wires("");
    if m.dim() != sys.dim() {
        return Err(Error::ShapeMismatch(format!(
            "effect of dimension {} on a type of dimension {}",
            m.dim(),
            sys.dim()
        )));
    }
    if m.system() == &sys {
        return Ok(m);
    }
    if let Ok(p) = m.permute_systems(sys.labels()) {
        if p.system() == &sys {
            return Ok(p);
        }
    }
    m.reshape_system(sys)
}

/// If `m = ρ ⊗ I_tops` with ρ a density matrix, returns ρ.
pub fn prep_discard_state(m: &ComplexMatrix, typ: &HigherOrderType, tol: f64) -> Option<DMatrix<C64>> {
    let m = on_type_wires(m.clone(), typ).ok()?;
    let d = typ.dim();
    let rho = m.partial_trace(&typ.tops("")).ok()?.scale_real(1.0 / d as f64);
    let rebuilt = DiscardEffect::prep_discard(rho.data(), typ.clone()).ok()?;
    let ok = rebuilt.matrix.frobenius_distance(&m).ok()? <= tol
        && rho.is_psd(tol)
        && (rho.trace().re - 1.0).abs() <= tol;
    ok.then(|| rho.into_data())
}

/// PSD and normalised against every element of the non-signalling affine basis.
pub fn is_process_matrix(w: &ComplexMatrix, typ: &HigherOrderType, tol: f64) -> Result<bool> {
    let w = on_type_wires(w.clone(), typ)?;
    if !w.is_psd(tol) {
        return Ok(false);
    }
    Ok(normalisation_defect(&w, typ)? <= tol)
}

/// `max_g |Tr[Wᵀ J(g)] − 1|` over the affine basis.
pub fn normalisation_defect(w: &ComplexMatrix, typ: &HigherOrderType) -> Result<f64> {
    let basis = ProductBasis::new(typ.dims())?;
    let wd = w.data();
    Ok((0..basis.len())
        .into_par_iter()
        .map(|k| {
            let e = basis.element(k);
            let pairing: C64 = wd.iter().zip(e.iter()).map(|(a, b)| a * b).sum();
            (pairing - C64::new(1.0, 0.0)).norm()
        })
        .reduce(|| 0.0, f64::max))
}

/// Draws a valid effect from the given family.
///
/// Process-matrix samples are convex mixtures of prep-discards and
/// sequential combs over the pairs in random causal orders.
pub fn sample_discard(typ: &HigherOrderType, family: EffectFamily, seed: u64) -> Result<DiscardEffect> {
    let mut rng = rng_from_seed(seed);
    let prep = DiscardEffect::prep_discard(&haar_density(&mut rng, typ.dim()), typ.clone())?;
    if family == EffectFamily::PrepDiscard {
        return Ok(prep);
    }
    let n_combs = rng.random_range(1..=2usize);
    let mut parts = vec![prep.matrix.into_data()];
    for c in 0..n_combs {
        parts.push(sequential_comb(typ, derive_seed(seed, 0xC0B, c as u64))?.into_data());
    }
    let weights: Vec<f64> = (0..parts.len()).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = DMatrix::<C64>::zeros(parts[0].nrows(), parts[0].ncols());
    for (w, p) in weights.iter().zip(&parts) {
        acc += p * C64::new(w / total, 0.0);
    }
    Ok(DiscardEffect {
        matrix: ComplexMatrix::square(acc, typ.wires(""))?,
        typ: typ.clone(),
        family: EffectFamily::ProcessMatrix,
    })
}

/// A deterministic comb visiting the pairs in a random order with a
/// memory line: prepare on the first bottom, then channels from each top
/// (plus memory) to the next bottom (plus memory), finally discard.
pub fn sequential_comb(typ: &HigherOrderType, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = rng_from_seed(seed);
    let n = typ.len();
    if n == 0 {
        return Ok(ComplexMatrix::scalar(C64::new(1.0, 0.0)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mem = 2usize;
    let dims = typ.dims();
    let b = |k: usize| super::types::bottom_label(k);
    let t = |k: usize| super::types::top_label(k);

    let first = order[0];
    let rho = haar_density(&mut rng, dims[first] * mem);
    let mut acc = ComplexMatrix::square(
        rho,
        WireSystem::new(vec![dims[first], mem], vec![b(first), "__m0".to_string()])?,
    )?;
    for step in 1..n {
        let (prev, next) = (order[step - 1], order[step]);
        let ch = random_cptp(dims[prev] * mem, dims[next] * mem, 2, rng.random())?;
        let sys = WireSystem::new(
            vec![dims[prev], mem, dims[next], mem],
            vec![t(prev), format!("__m{}", step - 1), b(next), format!("__m{step}")],
        )?;
        let choi = ch.choi().reshape_system(sys)?;
        acc = link_product(&acc, &choi, &[format!("__m{}", step - 1)])?;
    }
    let last = order[n - 1];
    let discard = ComplexMatrix::identity(WireSystem::single(t(last), dims[last])?);
    let w = acc
        .partial_trace(&[format!("__m{}", n - 1)])?
        .tensor_product(&discard)?;
    w.permute_systems(typ.wires("").labels())
}

/// `Tr[Wᵀ J]` of a state against an effect on all of its pairs.
pub fn apply_effect(state: &HigherOrderMap, w: &DiscardEffect) -> Result<f64> {
    if !state.is_state() || state.target() != w.typ() {
        return Err(Error::TypeMismatch("effect and state types differ".into()));
    }
    Ok(state.choi().transpose_pairing(&w.matrix)?.re)
}

/// Links the state with `w` on the pairs not in `kept`; `w` is typed on those pairs in order.
pub fn reduced_state(state: &HigherOrderMap, w: &DiscardEffect, kept: &[usize]) -> Result<HigherOrderMap> {
    if !state.is_state() {
        return Err(Error::TypeMismatch("reduced_state expects a state".into()));
    }
    let typ = state.target();
    let discarded: Vec<usize> = (0..typ.len()).filter(|k| !kept.contains(k)).collect();
    if kept.iter().any(|&k| k >= typ.len()) {
        return Err(Error::TypeMismatch("kept pair out of range".into()));
    }
    if &typ.select(&discarded)? != w.typ() {
        return Err(Error::TypeMismatch("effect type differs from the discarded pairs".into()));
    }
    let labels: Vec<String> = discarded
        .iter()
        .flat_map(|&k| {
            [
                format!("{OUT}{}", super::types::bottom_label(k)),
                format!("{OUT}{}", super::types::top_label(k)),
            ]
        })
        .collect();
    let w_on_state = w.matrix.relabel(&labels)?;
    let linked = link_product(state.choi(), &w_on_state, &labels)?;
    // renumber kept pairs consecutively, in the order given
    let kept_typ = typ.select(kept)?;
    let order: Vec<String> = kept
        .iter()
        .flat_map(|&k| {
            [
                format!("{OUT}{}", super::types::bottom_label(k)),
                format!("{OUT}{}", super::types::top_label(k)),
            ]
        })
        .collect();
    let reordered = linked.permute_systems(&order)?;
    HigherOrderMap::state(reordered.into_data(), kept_typ)
}

/// Max deviation of a state from being a non-signalling CPTP state-channel.
pub fn state_defect(state: &HigherOrderMap) -> Result<f64> {
    let t = state.target();
    let tp = trace_preservation_defect(state.choi(), &t.tops(OUT))?;
    let ns = nonsignalling_defect(state.choi(), &t.parties(OUT))?;
    Ok(tp.max(ns))
}

/// Deterministic QBox state: PSD, trace preserving and non-signalling.
pub fn is_deterministic_state(state: &HigherOrderMap, tol: f64) -> Result<bool> {
    Ok(state.is_state() && state.choi().is_psd(tol) && state_defect(state)? <= tol)
}

/// Difference between the reduced states left by two effects on the same pairs.
pub fn verify_no_superluminal(
    state: &HigherOrderMap,
    kept: &[usize],
    w1: &DiscardEffect,
    w2: &DiscardEffect,
    tol: f64,
) -> Result<f64> {
    let defect = state_defect(state)?;
    if defect > tol || !state.choi().is_psd(tol) {
        return Err(Error::Signalling(defect));
    }
    let r1 = reduced_state(state, w1, kept)?;
    let r2 = reduced_state(state, w2, kept)?;
    r1.distance(&r2)
}

/// A random non-signalling state: local channels `(b_k ⊗ a_k) → t_k` acting
/// on a shared entangled ancilla, mixed with an independent product.
pub fn random_nonsignalling_state(typ: &HigherOrderType, seed: u64) -> Result<HigherOrderMap> {
    let mut rng = rng_from_seed(seed);
    let n = typ.len();
    let anc = 2usize;
    let psi = haar_state(&mut rng, anc.pow(n as u32));
    let shared = DMatrix::from_fn(psi.len(), psi.len(), |i, j| psi[i] * psi[j].conj());
    let anc_labels: Vec<String> = (0..n).map(|k| format!("__a{k}")).collect();
    let mut acc = ComplexMatrix::square(shared, WireSystem::new(vec![anc; n], anc_labels.clone())?)?;
    for (k, &d) in typ.dims().iter().enumerate() {
        let ch = random_cptp(d * anc, d, anc, rng.random())?;
        let sys = WireSystem::new(
            vec![d, anc, d],
            vec![
                format!("{OUT}{}", super::types::bottom_label(k)),
                anc_labels[k].clone(),
                format!("{OUT}{}", super::types::top_label(k)),
            ],
        )?;
        acc = link_product(&acc, &ch.choi().reshape_system(sys)?, &[anc_labels[k].clone()])?;
    }
    let entangled = HigherOrderMap::new(acc, HigherOrderType::trivial(), typ.clone())?;

    let mut product = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for &d in typ.dims() {
        let ch = random_cptp(d, d, 2, rng.random())?;
        product = product.kronecker(ch.choi().data());
    }
    let product = HigherOrderMap::state(product, typ.clone())?;
    let p: f64 = rng.random_range(0.5..1.0);
    let mixed = entangled.choi().data() * C64::new(p, 0.0) + product.choi().data() * C64::new(1.0 - p, 0.0);
    HigherOrderMap::state(mixed, typ.clone())
}
