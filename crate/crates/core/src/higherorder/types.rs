use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::{random_cptp, Channel};
use crate::error::{Error, Result};
use crate::tensorcore::{derive_seed, link_product, ComplexMatrix, MatrixJson, WireSystem, C64};

/// A tensor product of pairs `[H_i, H_i]`, one dimension per pair.
///
/// Pairs are positional: pair `k` owns the wires `p{k}.b` (bottom, the
/// input of a state-channel) and `p{k}.t` (top, its output). The empty list
/// is the trivial type `[I, I]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HigherOrderType {
    dims: Vec<usize>,
}

pub(crate) const IN: &str = "in:";
pub(crate) const OUT: &str = "out:";

pub fn bottom_label(k: usize) -> String {
    format!("p{k}.b")
}

pub fn top_label(k: usize) -> String {
    format!("p{k}.t")
}

impl HigherOrderType {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension(format!("pair dimension {d}")));
        }
        Ok(Self { dims })
    }

    pub fn trivial() -> Self {
        Self { dims: Vec::new() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of pairs; `is_trivial` is the empty case.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.dims.is_empty()
    }

    /// Product of the pair dimensions (the bottom, equivalently top, dimension).
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn concat(&self, other: &HigherOrderType) -> HigherOrderType {
        HigherOrderType {
            dims: [self.dims.clone(), other.dims.clone()].concat(),
        }
    }

    pub fn select(&self, pairs: &[usize]) -> Result<HigherOrderType> {
        let dims = pairs
            .iter()
            .map(|&k| {
                self.dims
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::TypeMismatch(format!("no pair {k}")))
            })
            .collect::<Result<_>>()?;
        Ok(HigherOrderType { dims })
    }

    /// Interleaved `b, t` wires per pair, each label prefixed.
    pub fn wires(&self, prefix: &str) -> WireSystem {
        let mut dims = Vec::with_capacity(2 * self.len());
        let mut labels = Vec::with_capacity(2 * self.len());
        for (k, &d) in self.dims.iter().enumerate() {
            dims.extend([d, d]);
            labels.push(format!("{prefix}{}", bottom_label(k)));
            labels.push(format!("{prefix}{}", top_label(k)));
        }
        WireSystem::new(dims, labels).expect("pair labels are distinct")
    }

    pub fn bottoms(&self, prefix: &str) -> Vec<String> {
        (0..self.len()).map(|k| format!("{prefix}{}", bottom_label(k))).collect()
    }

    pub fn tops(&self, prefix: &str) -> Vec<String> {
        (0..self.len()).map(|k| format!("{prefix}{}", top_label(k))).collect()
    }

    /// `(bottom, top)` label pairs, the party partition of a state-channel.
    pub fn parties(&self, prefix: &str) -> Vec<(String, String)> {
        self.bottoms(prefix).into_iter().zip(self.tops(prefix)).collect()
    }
}

/// A map between higher-order types, stored as the Choi matrix over the
/// source wires (prefixed `in:`) followed by the target wires (`out:`).
///
/// States have a trivial source and effects a trivial target.
#[derive(Clone, Debug, PartialEq)]
pub struct HigherOrderMap {
    choi: ComplexMatrix,
    source: HigherOrderType,
    target: HigherOrderType,
}

impl HigherOrderMap {
    pub fn choi_system(source: &HigherOrderType, target: &HigherOrderType) -> WireSystem {
        source
            .wires(IN)
            .concat(&target.wires(OUT))
            .expect("in/out prefixes never collide")
    }

    /// Accepts a Choi matrix on the expected wires in any factor order.
    pub fn new(choi: ComplexMatrix, source: HigherOrderType, target: HigherOrderType) -> Result<Self> {
        let sys = Self::choi_system(&source, &target);
        let choi = if choi.system() == &sys {
            choi
        } else {
            let permuted = choi
                .permute_systems(sys.labels())
                .map_err(|_| Error::TypeMismatch("Choi wires do not match the map type".into()))?;
            if permuted.system() != &sys {
                return Err(Error::TypeMismatch("Choi wire dimensions do not match".into()));
            }
            permuted
        };
        Ok(Self {
            choi,
            source,
            target,
        })
    }

    /// Raw data laid out in the canonical wire order.
    pub fn from_data(data: DMatrix<C64>, source: HigherOrderType, target: HigherOrderType) -> Result<Self> {
        let sys = Self::choi_system(&source, &target);
        Self::new(ComplexMatrix::square(data, sys)?, source, target)
    }

    pub fn state(choi_data: DMatrix<C64>, typ: HigherOrderType) -> Result<Self> {
        Self::from_data(choi_data, HigherOrderType::trivial(), typ)
    }

    /// The state whose state-channel is `g`: bottoms (pair order) → tops.
    pub fn state_from_channel(g: &Channel, typ: HigherOrderType) -> Result<Self> {
        if g.in_dim() != typ.dim() || g.out_dim() != typ.dim() {
            return Err(Error::TypeMismatch("state-channel dimensions".into()));
        }
        let bottoms = WireSystem::new(typ.dims().to_vec(), typ.bottoms(OUT))?;
        let tops = WireSystem::new(typ.dims().to_vec(), typ.tops(OUT))?;
        let choi = g.choi().reshape_system(bottoms.concat(&tops)?)?;
        Self::new(choi, HigherOrderType::trivial(), typ)
    }

    pub fn identity(typ: &HigherOrderType) -> Self {
        let mut data = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for &d in typ.dims() {
            let phi = max_entangled(d);
            data = data.kronecker(&phi).kronecker(&phi);
        }
        // factors come out as (in:b, out:b, in:t, out:t) per pair
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        for (k, &d) in typ.dims().iter().enumerate() {
            for l in [bottom_label(k), top_label(k)] {
                labels.push(format!("{IN}{l}"));
                labels.push(format!("{OUT}{l}"));
                dims.extend([d, d]);
            }
        }
        let sys = WireSystem::new(dims, labels).expect("distinct labels");
        let choi = ComplexMatrix::square(data, sys).expect("matching dimension");
        Self::new(choi, typ.clone(), typ.clone()).expect("identity wires")
    }

    /// A one-slot comb: `pre` maps the target bottoms to the source bottoms
    /// plus memory, `post` maps the source tops plus memory to the target tops.
    ///
    /// On state-channels it acts as `g ↦ post ∘ (g ⊗ id_mem) ∘ pre`.
    pub fn comb(
        source: HigherOrderType,
        target: HigherOrderType,
        pre: &Channel,
        post: &Channel,
        memory: &[usize],
    ) -> Result<Self> {
        let mem = WireSystem::numbered("__mem", memory)?;
        let tb = WireSystem::new(target.dims().to_vec(), target.bottoms(OUT))?;
        let sb = WireSystem::new(source.dims().to_vec(), source.bottoms(IN))?;
        let st = WireSystem::new(source.dims().to_vec(), source.tops(IN))?;
        let tt = WireSystem::new(target.dims().to_vec(), target.tops(OUT))?;
        let pre_sys = tb.concat(&sb)?.concat(&mem)?;
        let post_sys = st.concat(&mem)?.concat(&tt)?;
        if pre.choi().dim() != pre_sys.dim() || pre.in_dim() != tb.dim() {
            return Err(Error::TypeMismatch("pre-processing channel wires".into()));
        }
        if post.choi().dim() != post_sys.dim() || post.out_dim() != tt.dim() {
            return Err(Error::TypeMismatch("post-processing channel wires".into()));
        }
        let a = pre.choi().reshape_system(pre_sys)?;
        let b = post.choi().reshape_system(post_sys)?;
        let linked = link_product(&a, &b, mem.labels())?;
        Self::new(linked, source, target)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn source(&self) -> &HigherOrderType {
        &self.source
    }

    pub fn target(&self) -> &HigherOrderType {
        &self.target
    }

    pub fn is_state(&self) -> bool {
        self.source.is_trivial()
    }

    pub fn distance(&self, other: &HigherOrderMap) -> Result<f64> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::TypeMismatch("maps of different types".into()));
        }
        self.choi.frobenius_distance(&other.choi)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &HigherOrderMap) -> Result<HigherOrderMap> {
        if self.target != next.source {
            return Err(Error::TypeMismatch(format!(
                "composing {:?} after {:?}",
                next.source.dims(),
                self.target.dims()
            )));
        }
        let a = self.choi.map_labels(|l| l.replacen(OUT, "mid:", 1))?;
        let b = next.choi.map_labels(|l| l.replacen(IN, "mid:", 1))?;
        let mid = self.target.wires("mid:");
        let linked = link_product(&a, &b, mid.labels())?;
        HigherOrderMap::new(linked, self.source.clone(), next.target.clone())
    }

    /// Parallel composition; the pairs of `other` are numbered after ours.
    pub fn tensor(&self, other: &HigherOrderMap) -> Result<HigherOrderMap> {
        let (ns, nt) = (self.source.len(), self.target.len());
        let shifted = other.choi.map_labels(|l| shift_pair(l, ns, nt))?;
        let prod = self.choi.tensor_product(&shifted)?;
        HigherOrderMap::new(
            prod,
            self.source.concat(&other.source),
            self.target.concat(&other.target),
        )
    }

    /// Applies the map to a state of its source type.
    pub fn apply(&self, state: &HigherOrderMap) -> Result<HigherOrderMap> {
        if !state.is_state() {
            return Err(Error::TypeMismatch("apply expects a state".into()));
        }
        state.then(self)
    }

    /// State-channel of a state: bottoms `p{k}.b` → tops `p{k}.t`.
    pub fn state_channel(&self) -> Result<Channel> {
        if !self.is_state() {
            return Err(Error::TypeMismatch("not a state".into()));
        }
        let t = &self.target;
        let order: Vec<String> = [t.bottoms(OUT), t.tops(OUT)].concat();
        let choi = self.choi.permute_systems(&order)?;
        let in_sys = WireSystem::new(t.dims().to_vec(), t.bottoms(""))?;
        let out_sys = WireSystem::new(t.dims().to_vec(), t.tops(""))?;
        Channel::from_choi_data(choi.into_data(), in_sys, out_sys)
    }

    pub fn to_json(&self) -> HigherOrderMapJson {
        HigherOrderMapJson {
            source: self.source.clone(),
            target: self.target.clone(),
            deterministic: None,
            choi: self.choi.to_json(),
        }
    }

    pub fn from_json(j: &HigherOrderMapJson) -> Result<Self> {
        Self::new(
            ComplexMatrix::from_json(&j.choi)?,
            j.source.clone(),
            j.target.clone(),
        )
    }
}

/// A random deterministic one-slot comb with a memory wire of dimension `memory`.
pub fn random_comb(
    source: &HigherOrderType,
    target: &HigherOrderType,
    memory: usize,
    seed: u64,
) -> Result<HigherOrderMap> {
    let (ds, dt) = (source.dim(), target.dim());
    let env = |i: usize, o: usize| i.div_ceil(o).max(2);
    let pre = random_cptp(dt, ds * memory, env(dt, ds * memory), derive_seed(seed, 1, 0))?;
    let post = random_cptp(ds * memory, dt, env(ds * memory, dt), derive_seed(seed, 2, 0))?;
    let mem: &[usize] = if memory > 1 { &[memory][..] } else { &[] };
    HigherOrderMap::comb(source.clone(), target.clone(), &pre, &post, mem)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HigherOrderMapJson {
    pub source: HigherOrderType,
    pub target: HigherOrderType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
    pub choi: MatrixJson,
}

/// `|Φ⟩⟨Φ|` with `|Φ⟩ = Σ|ii⟩`, unnormalised.
pub(crate) fn max_entangled(d: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
        }
    }
    m
}

fn shift_pair(label: &str, ns: usize, nt: usize) -> String {
    let (prefix, rest, shift) = if let Some(r) = label.strip_prefix(IN) {
        (IN, r, ns)
    } else if let Some(r) = label.strip_prefix(OUT) {
        (OUT, r, nt)
    } else {
        return label.to_string();
    };
    let Some(body) = rest.strip_prefix('p') else {
        return label.to_string();
    };
    let Some((num, side)) = body.split_once('.') else {
        return label.to_string();
    };
    match num.parse::<usize>() {
        Ok(k) => format!("{prefix}p{}.{side}", k + shift),
        Err(_) => label.to_string(),
    }
}
