//! The hyper-decoherence map: depolarise the bottom of every pair, keep the
//! top. Its split image is ordinary CPTP quantum theory.

mod functors;
mod purity;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use functors::{
    functor_f, functor_f_unchecked, functor_g, verify_equivalence_roundtrip, EquivalenceResiduals,
};
pub use purity::{
    check_purity_copreservation, purity_search, purity_search_channel, PuritySearchReport,
    PurityVerdict,
};

use crate::channels::{apply_channel_data, Channel};
use crate::error::{Error, Result};
use crate::higherorder::{
    link_product, max_entangled, sample_discard, DiscardEffect, EffectFamily, HigherOrderMap,
    HigherOrderType, IN, OUT,
};
use crate::tensorcore::{derive_seed, ComplexMatrix, WireSystem, C64};

/// The idempotent supermap `g ↦ g ∘ (⊗_i D_i)` on a QBox type.
#[derive(Clone, Debug, PartialEq)]
pub struct HypdecMap {
    map: HigherOrderMap,
}

pub fn hypdec_map(typ: &HigherOrderType) -> HypdecMap {
    let mut data = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let mut labels = Vec::new();
    let mut dims = Vec::new();
    for (k, &d) in typ.dims().iter().enumerate() {
        let depol = DMatrix::<C64>::identity(d * d, d * d) / C64::new(d as f64, 0.0);
        data = data.kronecker(&depol).kronecker(&max_entangled(d));
        let (b, t) = (crate::higherorder::bottom_label(k), crate::higherorder::top_label(k));
        labels.extend([format!("{IN}{b}"), format!("{OUT}{b}"), format!("{IN}{t}"), format!("{OUT}{t}")]);
        dims.extend([d; 4]);
    }
    let sys = WireSystem::new(dims, labels).expect("distinct labels");
    let choi = ComplexMatrix::square(data, sys).expect("matching dimension");
    HypdecMap {
        map: HigherOrderMap::new(choi, typ.clone(), typ.clone()).expect("hypdec wires"),
    }
}

impl HypdecMap {
    pub fn map(&self) -> &HigherOrderMap {
        &self.map
    }

    pub fn typ(&self) -> &HigherOrderType {
        self.map.source()
    }

    pub fn apply(&self, state: &HigherOrderMap) -> Result<HigherOrderMap> {
        self.map.apply(state)
    }

    /// Closed form on states: `J(g) ↦ I_bottoms ⊗ g(I/d)`.
    pub fn closed_form(&self, state: &HigherOrderMap) -> Result<HigherOrderMap> {
        if state.target() != self.typ() || !state.is_state() {
            return Err(Error::TypeMismatch("state type differs from hypdec type".into()));
        }
        let g = state.state_channel()?;
        let d = g.in_dim();
        let mixed = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
        let image = apply_channel_data(&g, &mixed)?;
        let prep = Channel::discard_prepare(g.in_sys().clone(), g.out_sys().clone(), &image)?;
        HigherOrderMap::state_from_channel(&prep, self.typ().clone())
    }

    /// The effect `W ∘ hypdec` on the source type.
    pub fn composite_effect(&self, w: &DiscardEffect) -> Result<ComplexMatrix> {
        if w.typ() != self.typ() {
            return Err(Error::TypeMismatch("effect type differs from hypdec type".into()));
        }
        let out = self.typ().wires(OUT);
        let w_out = w.matrix().relabel(out.labels())?;
        let linked = link_product(self.map.choi(), &w_out, out.labels())?;
        linked.relabel(self.typ().wires("").labels())
    }
}

/// `‖J(h∘h) − J(h)‖_F`.
pub fn verify_idempotent(h: &HypdecMap) -> Result<f64> {
    h.map.then(&h.map)?.distance(&h.map)
}

/// Same as [`verify_idempotent`] for an arbitrary endo-supermap.
pub fn idempotence_residual(m: &HigherOrderMap) -> Result<f64> {
    m.then(m)?.distance(m)
}

/// Distance of `m` from the prep-discard form `ρ ⊗ I_tops`, with
/// `ρ = Tr_tops(m)/d` read off by partial trace, plus any failure of ρ to be
/// a state.
pub fn prep_discard_residual(m: &ComplexMatrix, typ: &HigherOrderType) -> Result<f64> {
    let d = typ.dim();
    let rho = m.partial_trace(&typ.tops(""))?.scale_real(1.0 / d as f64);
    let rebuilt = DiscardEffect::prep_discard(rho.data(), typ.clone())?;
    let shape = rebuilt.matrix().frobenius_distance(m)?;
    let trace = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let negativity = (-rho.min_eigenvalue()).max(0.0);
    Ok(shape.max(trace).max(negativity))
}

/// Result of the no-backwards-signalling suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardsSignallingResiduals {
    /// Worst distance of a composite effect from the prep-discard family.
    pub prep_discard: f64,
    /// Worst distance between composite effects of different samples.
    pub spread: f64,
}

/// Samples `trials` process matrices on the hypdec type and checks that each
/// composite `W ∘ hypdec` is a prep-discard effect.
pub fn verify_no_backwards_signalling(
    h: &HypdecMap,
    trials: usize,
    seed: u64,
) -> Result<BackwardsSignallingResiduals> {
    let typ = h.typ().clone();
    let composites = (0..trials)
        .into_par_iter()
        .map(|i| {
            let w = sample_discard(&typ, EffectFamily::ProcessMatrix, derive_seed(seed, 0xB5, i as u64))?;
            let e = h.composite_effect(&w)?;
            Ok((prep_discard_residual(&e, &typ)?, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let prep_discard = composites.iter().map(|(r, _)| *r).fold(0.0, f64::max);
    let spread = match composites.first() {
        Some((_, first)) => composites
            .iter()
            .map(|(_, e)| e.frobenius_distance(first))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max),
        None => 0.0,
    };
    Ok(BackwardsSignallingResiduals { prep_discard, spread })
}

/// `Choi = I_bottoms ⊗ I_tops/d`: discard the input, prepare `I/d`.
pub fn maximally_mixed_state(typ: &HigherOrderType) -> HigherOrderMap {
    let d = typ.dim();
    let mut data = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for &dk in typ.dims() {
        let local = DMatrix::<C64>::identity(dk * dk, dk * dk) / C64::new(dk as f64, 0.0);
        data = data.kronecker(&local);
    }
    debug_assert_eq!(data.nrows(), d * d);
    HigherOrderMap::state(data, typ.clone()).expect("maximally mixed wires")
}

/// Residuals `(‖hypdec(m) − m‖, ‖F(m) − I/d‖)` for the maximally mixed state `m`.
pub fn verify_maxmix_preserved(typ: &HigherOrderType) -> Result<(f64, f64)> {
    let h = hypdec_map(typ);
    let m = maximally_mixed_state(typ);
    let fixed = h.apply(&m)?.distance(&m)?;
    let f = functor_f_unchecked(&m)?;
    let d = typ.dim();
    let expected = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    let image = (f.choi().data() - expected).norm();
    Ok((fixed, image))
}

/// `‖J(hypdec) − J(id)‖_F`, nonzero exactly when some pair has dimension ≥ 2.
pub fn strictness_gap(typ: &HigherOrderType) -> Result<f64> {
    hypdec_map(typ).map.distance(&HigherOrderMap::identity(typ))
}

/// An object of the split category: a type with its hypdec idempotent.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSystem {
    idem: HypdecMap,
}

impl SplitSystem {
    pub fn new(typ: &HigherOrderType) -> Self {
        Self { idem: hypdec_map(typ) }
    }

    pub fn typ(&self) -> &HigherOrderType {
        self.idem.typ()
    }

    pub fn idem(&self) -> &HypdecMap {
        &self.idem
    }
}

/// A supermap invariant under the idempotents of its source and target.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitMorphism {
    map: HigherOrderMap,
    source: SplitSystem,
    target: SplitSystem,
}

impl SplitMorphism {
    pub fn new(map: HigherOrderMap, tol: f64) -> Result<Self> {
        let source = SplitSystem::new(map.source());
        let target = SplitSystem::new(map.target());
        let residual = invariance_residual(&map, &source, &target)?;
        if residual > tol {
            return Err(Error::InvarianceViolated(residual));
        }
        Ok(Self { map, source, target })
    }

    /// `hypdec_tgt ∘ m ∘ hypdec_src`, invariant by idempotency.
    pub fn project(m: &HigherOrderMap) -> Result<Self> {
        let source = SplitSystem::new(m.source());
        let target = SplitSystem::new(m.target());
        let map = source.idem.map.then(m)?.then(&target.idem.map)?;
        Ok(Self { map, source, target })
    }

    pub fn identity(typ: &HigherOrderType) -> Self {
        let sys = SplitSystem::new(typ);
        Self {
            map: sys.idem.map.clone(),
            source: sys.clone(),
            target: sys,
        }
    }

    pub fn map(&self) -> &HigherOrderMap {
        &self.map
    }

    pub fn source(&self) -> &SplitSystem {
        &self.source
    }

    pub fn target(&self) -> &SplitSystem {
        &self.target
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SplitMorphism) -> Result<SplitMorphism> {
        Ok(Self {
            map: self.map.then(&next.map)?,
            source: self.source.clone(),
            target: next.target.clone(),
        })
    }

    pub fn tensor(&self, other: &SplitMorphism) -> Result<SplitMorphism> {
        let map = self.map.tensor(&other.map)?;
        Ok(Self {
            source: SplitSystem::new(map.source()),
            target: SplitSystem::new(map.target()),
            map,
        })
    }
}

fn invariance_residual(m: &HigherOrderMap, source: &SplitSystem, target: &SplitSystem) -> Result<f64> {
    let sandwiched = source.idem.map.then(m)?.then(&target.idem.map)?;
    sandwiched.distance(m)
}

/// `s = hypdec_tgt ∘ s ∘ hypdec_src` within `tol`.
pub fn split_hom_check(
    s: &HigherOrderMap,
    typ_src: &HigherOrderType,
    typ_tgt: &HigherOrderType,
    tol: f64,
) -> Result<bool> {
    if s.source() != typ_src || s.target() != typ_tgt {
        return Err(Error::TypeMismatch("map type differs from the given types".into()));
    }
    let r = invariance_residual(s, &SplitSystem::new(typ_src), &SplitSystem::new(typ_tgt))?;
    Ok(r <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{depolarizing_channel, random_cptp, unitary_channel};
    use crate::higherorder::{is_deterministic_supermap, random_comb, DEFAULT_ANCILLAS};
    use crate::tensorcore::{random_unitary, DEFAULT_TOL};

    fn typ(d: &[usize]) -> HigherOrderType {
        HigherOrderType::new(d.to_vec()).unwrap()
    }

    #[test]
    fn hypdec_is_idempotent() {
        for dims in [vec![2], vec![3], vec![2, 2]] {
            assert!(verify_idempotent(&hypdec_map(&typ(&dims))).unwrap() < 1e-10);
        }
        assert_eq!(verify_idempotent(&hypdec_map(&HigherOrderType::trivial())).unwrap(), 0.0);
    }

    #[test]
    fn rotation_on_bottom_is_not_idempotent() {
        // g ↦ g ∘ V for a random unitary V
        let t = typ(&[2]);
        let v = unitary_channel(&random_unitary(2, 5).unwrap()).unwrap();
        let id = Channel::identity_dim(2).unwrap();
        let m = HigherOrderMap::comb(t.clone(), t, &v, &id, &[]).unwrap();
        assert!(idempotence_residual(&m).unwrap() > 0.1);
    }

    #[test]
    fn hypdec_matches_closed_form() {
        let t = typ(&[2, 2]);
        let h = hypdec_map(&t);
        for seed in 0..5 {
            let s = crate::higherorder::random_nonsignalling_state(&t, seed).unwrap();
            let a = h.apply(&s).unwrap();
            let b = h.closed_form(&s).unwrap();
            assert!(a.distance(&b).unwrap() < 1e-12);
        }
        let t1 = typ(&[2]);
        let id_state = HigherOrderMap::state_from_channel(&Channel::identity_dim(2).unwrap(), t1.clone()).unwrap();
        let out = hypdec_map(&t1).apply(&id_state).unwrap();
        let expected = DMatrix::<C64>::identity(4, 4) * C64::new(0.5, 0.0);
        assert!((out.choi().data() - expected).norm() < 1e-14);
    }

    #[test]
    fn hypdec_fixes_input_independent_states() {
        let t = typ(&[2]);
        let zero = DMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let (i, o) = crate::channels::default_systems(&[2], &[2]).unwrap();
        let prep = Channel::discard_prepare(i, o, &zero).unwrap();
        let s = HigherOrderMap::state_from_channel(&prep, t.clone()).unwrap();
        assert!(hypdec_map(&t).apply(&s).unwrap().distance(&s).unwrap() < 1e-15);
    }

    #[test]
    fn hypdec_is_deterministic() {
        for dims in [vec![2], vec![3]] {
            let h = hypdec_map(&typ(&dims));
            assert!(is_deterministic_supermap(h.map(), DEFAULT_TOL, &DEFAULT_ANCILLAS).unwrap());
        }
    }

    #[test]
    fn composite_effects_are_prep_discard() {
        for dims in [vec![2], vec![2, 2]] {
            let h = hypdec_map(&typ(&dims));
            let r = verify_no_backwards_signalling(&h, 20, 3).unwrap();
            assert!(r.prep_discard < 1e-9);
            assert!(r.spread < 1e-9);
        }
    }

    #[test]
    fn composite_of_prep_discard_is_prep_discard() {
        let t = typ(&[2]);
        let w = sample_discard(&t, EffectFamily::PrepDiscard, 8).unwrap();
        let e = hypdec_map(&t).composite_effect(&w).unwrap();
        assert!(prep_discard_residual(&e, &t).unwrap() < 1e-12);
    }

    #[test]
    fn reversed_order_comb_effect_is_prep_discard() {
        let t = typ(&[2, 2]);
        let h = hypdec_map(&t);
        for seed in 0..8 {
            let w = crate::higherorder::sequential_comb(&t, seed).unwrap();
            let w = DiscardEffect::new(w, t.clone(), EffectFamily::ProcessMatrix, 1e-9).unwrap();
            let e = h.composite_effect(&w).unwrap();
            assert!(prep_discard_residual(&e, &t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_is_preserved() {
        let (fixed, image) = verify_maxmix_preserved(&typ(&[2])).unwrap();
        assert_eq!(fixed, 0.0);
        assert!(image < 1e-15);
        for dims in [vec![2, 3], vec![2, 2], vec![3]] {
            let (fixed, image) = verify_maxmix_preserved(&typ(&dims)).unwrap();
            assert!(fixed < 1e-12 && image < 1e-12);
        }
    }

    #[test]
    fn hypdec_is_not_identity() {
        for dims in [vec![2], vec![3], vec![2, 2], vec![1, 2]] {
            assert!(strictness_gap(&typ(&dims)).unwrap() > 0.5);
        }
        assert!(strictness_gap(&typ(&[1])).unwrap() < 1e-15);
    }

    #[test]
    fn split_hom_checks() {
        let t = typ(&[2]);
        let h = hypdec_map(&t);
        assert!(split_hom_check(h.map(), &t, &t, 1e-10).unwrap());
        let g = functor_g(&random_cptp(2, 2, 2, 3).unwrap()).unwrap();
        assert!(split_hom_check(g.map(), &t, &t, 1e-10).unwrap());
        let comb = random_comb(&t, &t, 2, 4).unwrap();
        assert!(!split_hom_check(&comb, &t, &t, 1e-6).unwrap());
        let projected = SplitMorphism::project(&comb).unwrap();
        assert!(split_hom_check(projected.map(), &t, &t, 1e-10).unwrap());
        assert!(matches!(SplitMorphism::new(comb, 1e-6), Err(Error::InvarianceViolated(_))));
    }

    #[test]
    fn depolarizing_state_is_hypdec_fixed_point() {
        let t = typ(&[3]);
        let s = HigherOrderMap::state_from_channel(&depolarizing_channel(3).unwrap(), t.clone()).unwrap();
        assert!(s.distance(&maximally_mixed_state(&t)).unwrap() < 1e-15);
    }
}
