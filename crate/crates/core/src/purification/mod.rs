//! Purifications of QBox states: two extremal states with the same marginal
//! on the system that no reversible transformation of the environment
//! connects.

mod optimize;
mod search;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use optimize::{connector_residual, connector_residual_states, ConnectorOptions, ConnectorReport};
pub use search::{find_counterexample_instance, find_instance, shift_unitary, FAMILIES};

use crate::channels::{choi_from_kraus, is_extremal_kraus, kraus_from_choi, Channel, KrausSet};
use crate::error::{Error, Result};
use crate::higherorder::{
    is_deterministic_state, reduced_state, DiscardEffect, HigherOrderMap, HigherOrderMapJson,
    HigherOrderType,
};
use crate::tensorcore::{haar_unitary, rng_from_seed, ComplexMatrix, MatrixJson, WireSystem, C64};

/// A one-slot comb on the environment pairs: `pre` acts on the incoming
/// environment bottoms with a memory initialised to `|0⟩`, `post` on the
/// environment tops with the memory, which is then discarded.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversibleComb {
    pre: ComplexMatrix,
    post: ComplexMatrix,
    memory: WireSystem,
    env: HigherOrderType,
}

fn unitary_system(env: &HigherOrderType, m: usize) -> Result<WireSystem> {
    let mut dims = env.dims().to_vec();
    let mut labels: Vec<String> = (0..env.len()).map(|k| format!("e{k}")).collect();
    dims.push(m);
    labels.push("mem".into());
    WireSystem::new(dims, labels)
}

impl ReversibleComb {
    pub fn new(pre: DMatrix<C64>, post: DMatrix<C64>, env: HigherOrderType, memory: usize, tol: f64) -> Result<Self> {
        if memory == 0 || env.is_trivial() {
            return Err(Error::InvalidDimension("comb needs a memory and an environment".into()));
        }
        let sys = unitary_system(&env, memory)?;
        let pre = ComplexMatrix::square(pre, sys.clone())?;
        let post = ComplexMatrix::square(post, sys)?;
        for u in [&pre, &post] {
            let defect = u.unitarity_defect();
            if defect > tol {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(Self {
            pre,
            post,
            memory: WireSystem::single("mem", memory)?,
            env,
        })
    }

    pub fn identity(env: &HigherOrderType) -> Result<Self> {
        let d = env.dim();
        Self::new(DMatrix::identity(d, d), DMatrix::identity(d, d), env.clone(), 1, 0.0)
    }

    /// Haar-random pre and post unitaries.
    pub fn random(env: &HigherOrderType, memory: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let k = env.dim() * memory;
        let pre = haar_unitary(&mut rng, k);
        let post = haar_unitary(&mut rng, k);
        Self::new(pre, post, env.clone(), memory, 1e-9)
    }

    pub fn pre(&self) -> &ComplexMatrix {
        &self.pre
    }

    pub fn post(&self) -> &ComplexMatrix {
        &self.post
    }

    pub fn memory_dim(&self) -> usize {
        self.memory.dim()
    }

    pub fn env(&self) -> &HigherOrderType {
        &self.env
    }

    /// The comb as a supermap on the environment type.
    pub fn to_map(&self) -> Result<HigherOrderMap> {
        let (d, m) = (self.env.dim(), self.memory_dim());
        let u = self.pre.data();
        let v = self.post.data();
        // pre: |e⟩ ↦ U|e, 0⟩; post Kraus: ⟨mem = k| V
        let pre_k = DMatrix::from_fn(d * m, d, |r, e| u[(r, e * m)]);
        let post_k: Vec<DMatrix<C64>> = (0..m)
            .map(|k| DMatrix::from_fn(d, d * m, |e, c| v[(e * m + k, c)]))
            .collect();
        let pre = choi_from_kraus(&KrausSet::from_data(
            vec![pre_k],
            WireSystem::numbered("i", &[d])?,
            WireSystem::numbered("o", &[d * m])?,
        )?)?;
        let post = choi_from_kraus(&KrausSet::from_data(
            post_k,
            WireSystem::numbered("i", &[d * m])?,
            WireSystem::numbered("o", &[d])?,
        )?)?;
        let mem: &[usize] = if m > 1 { &[m][..] } else { &[] };
        HigherOrderMap::comb(self.env.clone(), self.env.clone(), &pre, &post, mem)
    }
}

/// Renames pair numbers in a Choi label, `…p{k}.x ↦ …p{map[k]}.x`.
fn renumber(label: &str, map: &[usize]) -> String {
    let (prefix, rest) = label.split_once(':').map(|(a, b)| (format!("{a}:"), b)).unwrap_or((String::new(), label));
    match rest.strip_prefix('p').and_then(|r| r.split_once('.')) {
        Some((k, side)) => match k.parse::<usize>() {
            Ok(k) if k < map.len() => format!("{prefix}p{}.{side}", map[k]),
            _ => label.to_string(),
        },
        None => label.to_string(),
    }
}

/// Acts with `r` on the pairs `env_pairs` of `psi` (identity elsewhere).
pub fn apply_reversible_comb(r: &ReversibleComb, psi: &HigherOrderMap, env_pairs: &[usize]) -> Result<HigherOrderMap> {
    if !psi.is_state() {
        return Err(Error::TypeMismatch("reversible combs act on states".into()));
    }
    let typ = psi.target();
    if env_pairs.iter().any(|&k| k >= typ.len()) || &typ.select(env_pairs)? != r.env() {
        return Err(Error::TypeMismatch("environment pairs differ from the comb type".into()));
    }
    let rest: Vec<usize> = (0..typ.len()).filter(|k| !env_pairs.contains(k)).collect();
    let comb = r.to_map()?.choi().map_labels(|l| renumber(l, env_pairs))?;
    let id = HigherOrderMap::identity(&typ.select(&rest)?)
        .choi()
        .map_labels(|l| renumber(l, &rest))?;
    let map = HigherOrderMap::new(comb.tensor_product(&id)?, typ.clone(), typ.clone())?;
    psi.then(&map)
}

/// Two purifications on `[system, environment]` built from a pair of unitaries.
#[derive(Clone, Debug, PartialEq)]
pub struct PurificationInstance {
    d: usize,
    u0: ComplexMatrix,
    u1: ComplexMatrix,
    family: String,
    psi1: HigherOrderMap,
    psi2: HigherOrderMap,
}

/// Extremality of a state through its state-channel.
pub fn is_extremal_state(psi: &HigherOrderMap, tol: f64) -> Result<bool> {
    let g = psi.state_channel()?;
    is_extremal_kraus(&kraus_from_choi(&g, tol)?, tol)
}

impl PurificationInstance {
    pub fn new(
        u0: DMatrix<C64>,
        u1: DMatrix<C64>,
        family: impl Into<String>,
        psi1: HigherOrderMap,
        psi2: HigherOrderMap,
        tol: f64,
    ) -> Result<Self> {
        let d = u0.nrows();
        let sys = WireSystem::single("e", d)?;
        let u0 = ComplexMatrix::square(u0, sys.clone())?;
        let u1 = ComplexMatrix::square(u1, sys)?;
        for u in [&u0, &u1] {
            let defect = u.unitarity_defect();
            if defect > tol {
                return Err(Error::NotUnitary(defect));
            }
        }
        if phase_overlap(u0.data(), u1.data()) * d as f64 >= d as f64 - tol {
            return Err(Error::Precondition("unitaries are equal up to a global phase".into()));
        }
        let typ = HigherOrderType::new(vec![d, d])?;
        for psi in [&psi1, &psi2] {
            if psi.target() != &typ || !psi.is_state() {
                return Err(Error::TypeMismatch("purifications live on [system, environment]".into()));
            }
            if !is_deterministic_state(psi, tol)? {
                return Err(Error::Precondition("purification is not a deterministic state".into()));
            }
            if !is_extremal_state(psi, tol)? {
                return Err(Error::Precondition("purification is not extremal".into()));
            }
        }
        Ok(Self {
            d,
            u0,
            u1,
            family: family.into(),
            psi1,
            psi2,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u0(&self) -> &ComplexMatrix {
        &self.u0
    }

    pub fn u1(&self) -> &ComplexMatrix {
        &self.u1
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn psi1(&self) -> &HigherOrderMap {
        &self.psi1
    }

    pub fn psi2(&self) -> &HigherOrderMap {
        &self.psi2
    }

    /// `|Tr(U₀†U₁)|/d`, which is 1 exactly when the unitaries agree up to phase.
    pub fn phase_witness(&self) -> f64 {
        phase_overlap(self.u0.data(), self.u1.data())
    }

    pub fn to_json(&self) -> PurificationInstanceJson {
        PurificationInstanceJson {
            d: self.d,
            u0: (&self.u0).into(),
            u1: (&self.u1).into(),
            family: self.family.clone(),
            psi1: self.psi1.to_json(),
            psi2: self.psi2.to_json(),
        }
    }

    /// Re-validates every invariant of the loaded instance.
    pub fn from_json(j: &PurificationInstanceJson, tol: f64) -> Result<Self> {
        let u0 = ComplexMatrix::try_from(&j.u0)?;
        let u1 = ComplexMatrix::try_from(&j.u1)?;
        if u0.dim() != j.d {
            return Err(Error::ShapeMismatch("instance dimension".into()));
        }
        Self::new(
            u0.into_data(),
            u1.into_data(),
            j.family.clone(),
            HigherOrderMap::from_json(&j.psi1)?,
            HigherOrderMap::from_json(&j.psi2)?,
            tol,
        )
    }
}

pub(crate) fn phase_overlap(u0: &DMatrix<C64>, u1: &DMatrix<C64>) -> f64 {
    (u0.adjoint() * u1).trace().norm() / u0.nrows() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationInstanceJson {
    pub d: usize,
    #[serde(rename = "U0")]
    pub u0: MatrixJson,
    #[serde(rename = "U1")]
    pub u1: MatrixJson,
    #[serde(rename = "family-id")]
    pub family: String,
    pub psi1: HigherOrderMapJson,
    pub psi2: HigherOrderMapJson,
}

/// Worst distance between the system marginals of two states on
/// `[system, environment]` over `effects` on the environment, together with
/// the worst dependence of either marginal on the effect chosen.
pub fn marginal_residuals(psi1: &HigherOrderMap, psi2: &HigherOrderMap, effects: &[DiscardEffect]) -> Result<(f64, f64)> {
    let mut gap = 0.0f64;
    let mut dependence = 0.0f64;
    let mut first: Option<(HigherOrderMap, HigherOrderMap)> = None;
    for w in effects {
        let r1 = reduced_state(psi1, w, &[0])?;
        let r2 = reduced_state(psi2, w, &[0])?;
        gap = gap.max(r1.distance(&r2)?);
        match &first {
            Some((f1, f2)) => dependence = dependence.max(r1.distance(f1)?).max(r2.distance(f2)?),
            None => first = Some((r1, r2)),
        }
    }
    Ok((gap, dependence))
}

/// `max(marginal gap, effect dependence)` for an instance.
pub fn equal_marginals(inst: &PurificationInstance, effects: &[DiscardEffect]) -> Result<f64> {
    let (gap, dep) = marginal_residuals(&inst.psi1, &inst.psi2, effects)?;
    Ok(gap.max(dep))
}

/// The state discarding its inputs and preparing `|φ⟩` on the tops.
pub(crate) fn pure_preparation(phi: &[C64], typ: &HigherOrderType) -> Result<HigherOrderMap> {
    let q = typ.dim();
    let ops = (0..q)
        .map(|i| DMatrix::from_fn(q, q, |a, c| if c == i { phi[a] } else { C64::new(0.0, 0.0) }))
        .collect();
    let (ins, outs) = crate::channels::default_systems(typ.dims(), typ.dims())?;
    state_from_kraus(ops, ins, outs, typ)
}

pub(crate) fn state_from_kraus(
    ops: Vec<DMatrix<C64>>,
    ins: WireSystem,
    outs: WireSystem,
    typ: &HigherOrderType,
) -> Result<HigherOrderMap> {
    let g: Channel = choi_from_kraus(&KrausSet::from_data(ops, ins, outs)?)?;
    HigherOrderMap::state_from_channel(&g, typ.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::higherorder::{sample_discard, EffectFamily};
    use crate::tensorcore::haar_state;

    fn pair(d: usize) -> HigherOrderType {
        HigherOrderType::new(vec![d, d]).unwrap()
    }

    fn random_pure(d: usize, seed: u64) -> HigherOrderMap {
        let v = haar_state(&mut rng_from_seed(seed), d * d);
        pure_preparation(&v, &pair(d)).unwrap()
    }

    #[test]
    fn identity_comb_leaves_state_unchanged() {
        let psi = random_pure(2, 1);
        let env = HigherOrderType::new(vec![2]).unwrap();
        let out = apply_reversible_comb(&ReversibleComb::identity(&env).unwrap(), &psi, &[1]).unwrap();
        assert!(out.distance(&psi).unwrap() < 1e-14);
    }

    #[test]
    fn memoryless_comb_conjugates_environment() {
        // oracle: (I ⊗ U)|φ⟩ prepared directly
        let env = HigherOrderType::new(vec![2]).unwrap();
        let u = haar_unitary(&mut rng_from_seed(3), 2);
        let r = ReversibleComb::new(DMatrix::identity(2, 2), u.clone(), env, 1, 1e-12).unwrap();
        let v = haar_state(&mut rng_from_seed(4), 4);
        let psi = pure_preparation(&v, &pair(2)).unwrap();
        let out = apply_reversible_comb(&r, &psi, &[1]).unwrap();
        let rotated = DMatrix::<C64>::identity(2, 2).kronecker(&u) * nalgebra::DVector::from_vec(v);
        let expected = pure_preparation(rotated.as_slice(), &pair(2)).unwrap();
        assert!(out.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn comb_acts_on_the_named_pair() {
        let env = HigherOrderType::new(vec![2]).unwrap();
        let u = haar_unitary(&mut rng_from_seed(5), 2);
        let r = ReversibleComb::new(DMatrix::identity(2, 2), u.clone(), env, 1, 1e-12).unwrap();
        let v = haar_state(&mut rng_from_seed(6), 4);
        let psi = pure_preparation(&v, &pair(2)).unwrap();
        let out = apply_reversible_comb(&r, &psi, &[0]).unwrap();
        let rotated = u.kronecker(&DMatrix::<C64>::identity(2, 2)) * nalgebra::DVector::from_vec(v);
        let expected = pure_preparation(rotated.as_slice(), &pair(2)).unwrap();
        assert!(out.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn random_combs_keep_states_deterministic() {
        let env = HigherOrderType::new(vec![2]).unwrap();
        for seed in 0..3 {
            let s = crate::higherorder::random_nonsignalling_state(&pair(2), seed).unwrap();
            let r = ReversibleComb::random(&env, 2, seed + 10).unwrap();
            let out = apply_reversible_comb(&r, &s, &[1]).unwrap();
            assert!(is_deterministic_state(&out, 1e-9).unwrap());
        }
    }

    #[test]
    fn marginals_of_identical_and_different_states() {
        let env = HigherOrderType::new(vec![2]).unwrap();
        let effects: Vec<_> = (0..5).map(|s| sample_discard(&env, EffectFamily::ProcessMatrix, s).unwrap()).collect();
        let psi = random_pure(2, 7);
        assert_eq!(marginal_residuals(&psi, &psi, &effects).unwrap().0, 0.0);
        let zero = |k: usize| {
            let mut v = vec![C64::new(0.0, 0.0); 4];
            v[k] = C64::new(1.0, 0.0);
            pure_preparation(&v, &pair(2)).unwrap()
        };
        // |00⟩ against |10⟩: system marginals |0⟩ and |1⟩
        assert!(marginal_residuals(&zero(0), &zero(2), &effects).unwrap().0 > 0.1);
    }

    #[test]
    fn renumbering_labels() {
        assert_eq!(renumber("in:p0.b", &[3]), "in:p3.b");
        assert_eq!(renumber("out:p1.t", &[0, 2]), "out:p2.t");
        assert_eq!(renumber("mid:x", &[1]), "mid:x");
    }
}
