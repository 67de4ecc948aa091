//! The equivalence between the split category of hypdec and CPTP maps.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::SplitMorphism;
use crate::channels::{default_systems, is_cptp, random_cptp, unitary_channel, Channel};
use crate::error::{Error, Result};
use crate::higherorder::{
    link_product, max_entangled, random_comb, HigherOrderMap, HigherOrderType, IN, OUT,
};
use crate::tensorcore::{derive_seed, random_unitary, ComplexMatrix, WireSystem, C64};

const X: &str = "x:";

/// `F(s)(ρ) = [s applied to discard-and-prepare-ρ] at the maximally mixed input`.
pub fn functor_f(s: &SplitMorphism) -> Result<Channel> {
    functor_f_unchecked(s.map())
}

/// [`functor_f`] without the invariance requirement.
pub fn functor_f_unchecked(s: &HigherOrderMap) -> Result<Channel> {
    let src = s.source();
    let tgt = s.target();
    let ds = src.dim();
    // I_{in:b} ⊗ Φ_{x, in:t}
    let x_sys = WireSystem::new(src.dims().to_vec(), src.tops(X))?;
    let bottoms = WireSystem::new(src.dims().to_vec(), src.bottoms(IN))?;
    let tops = WireSystem::new(src.dims().to_vec(), src.tops(IN))?;
    let data = max_entangled(ds).kronecker(&DMatrix::<C64>::identity(ds, ds));
    let prep = ComplexMatrix::square(data, x_sys.concat(&tops)?.concat(&bottoms)?)?;
    let linked = link_product(&prep, s.choi(), src.wires(IN).labels())?;
    let traced = linked
        .partial_trace(&tgt.bottoms(OUT))?
        .scale_real(1.0 / tgt.dim() as f64);
    let (i, o) = default_systems(src.dims(), tgt.dims())?;
    let order: Vec<String> = [src.tops(X), tgt.tops(OUT)].concat();
    let choi = traced.permute_systems(&order)?;
    Channel::from_choi_data(choi.into_data(), i, o)
}

/// `G(f)`: `g ↦ discard input, prepare f(g(I/d))`, typed by the wire dims of `f`.
pub fn functor_g(f: &Channel) -> Result<SplitMorphism> {
    if !is_cptp(f, 1e-9) {
        return Err(Error::NotCptp);
    }
    let src = HigherOrderType::new(f.in_sys().dims().to_vec())?;
    let tgt = HigherOrderType::new(f.out_sys().dims().to_vec())?;
    let (ds, dt) = (src.dim(), tgt.dim());
    let data = (DMatrix::<C64>::identity(ds, ds) / C64::new(ds as f64, 0.0))
        .kronecker(f.choi().data())
        .kronecker(&DMatrix::<C64>::identity(dt, dt));
    let labels: Vec<String> = [src.bottoms(IN), src.tops(IN), tgt.tops(OUT), tgt.bottoms(OUT)].concat();
    let dims: Vec<usize> = [src.dims(), src.dims(), tgt.dims(), tgt.dims()].concat();
    let choi = ComplexMatrix::square(data, WireSystem::new(dims, labels)?)?;
    let map = HigherOrderMap::new(choi, src, tgt)?;
    SplitMorphism::new(map, 1e-9)
}

/// Worst residuals of the equivalence checks.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EquivalenceResiduals {
    /// `‖F(G(f)) − f‖`.
    pub fg: f64,
    /// `‖G(F(s)) − s‖` on projected supermaps.
    pub gf: f64,
    /// `‖F(t∘s) − F(t)∘F(s)‖`.
    pub composition: f64,
    /// `‖F(s⊗t) − F(s)⊗F(t)‖`.
    pub tensor: f64,
    /// `‖F(hypdec) − id‖`.
    pub identity: f64,
    /// `‖F(T₁) − F(T₂)‖` for distinct supermaps with the same projection.
    pub faithfulness: f64,
    /// Smallest `‖T₁ − T₂‖` among the faithfulness probes; must stay large.
    pub probe_separation: f64,
}

impl EquivalenceResiduals {
    pub fn max(&self) -> f64 {
        [self.fg, self.gf, self.composition, self.tensor, self.identity, self.faithfulness]
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn merge(self, o: Self) -> Self {
        Self {
            fg: self.fg.max(o.fg),
            gf: self.gf.max(o.gf),
            composition: self.composition.max(o.composition),
            tensor: self.tensor.max(o.tensor),
            identity: self.identity.max(o.identity),
            faithfulness: self.faithfulness.max(o.faithfulness),
            probe_separation: self.probe_separation.min(o.probe_separation),
        }
    }
}

fn channel_gap(a: &Channel, b: &Channel) -> Result<f64> {
    Ok((a.choi().data() - b.choi().data()).norm())
}

fn one_trial(typ: &HigherOrderType, seed: u64) -> Result<EquivalenceResiduals> {
    let d = typ.dim();
    let s = |k| derive_seed(seed, k, 0);
    let f1 = random_cptp(d, d, d, s(1))?.relabeled_default(typ)?;
    let fg = channel_gap(&functor_f(&functor_g(&f1)?)?, &f1)?;

    let t1 = SplitMorphism::project(&random_comb(typ, typ, 2, s(3))?)?;
    let t2 = SplitMorphism::project(&random_comb(typ, typ, 2, s(4))?)?;
    let gf = functor_g(&functor_f(&t1)?)?.map().distance(t1.map())?;
    let (ft1, ft2) = (functor_f(&t1)?, functor_f(&t2)?);
    let composition = channel_gap(&functor_f(&t1.then(&t2)?)?, &ft1.then(&ft2)?)?;
    // single pairs keep the joint map small; a lone pair gets a qubit partner
    let (da, db) = (typ.dims()[0], *typ.dims().get(1).unwrap_or(&2));
    let (ta, tb) = (HigherOrderType::new(vec![da])?, HigherOrderType::new(vec![db])?);
    let sa = SplitMorphism::project(&random_comb(&ta, &ta, 2, s(7))?)?;
    let sb = SplitMorphism::project(&random_comb(&tb, &tb, 2, s(8))?)?;
    let tensor = channel_gap(
        &functor_f(&sa.tensor(&sb)?)?,
        &tensor_channels(&functor_f(&sa)?, &functor_f(&sb)?)?,
    )?;

    // a bottom-only rotation is erased by the depolariser in front of it
    let raw = random_comb(typ, typ, 2, s(5))?;
    let v = unitary_channel(&random_unitary(d, s(6))?)?;
    let id = Channel::identity_dim(d)?;
    let rot = HigherOrderMap::comb(typ.clone(), typ.clone(), &v, &id, &[])?;
    let raw2 = rot.then(&raw)?;
    let probe_separation = raw.distance(&raw2)?;
    let p1 = SplitMorphism::project(&raw)?;
    let p2 = SplitMorphism::project(&raw2)?;
    let faithfulness = channel_gap(&functor_f(&p1)?, &functor_f(&p2)?)?
        .max(p1.map().distance(p2.map())?);

    Ok(EquivalenceResiduals {
        fg,
        gf,
        composition,
        tensor,
        identity: 0.0,
        faithfulness,
        probe_separation,
    })
}

/// Runs the round-trip, functoriality and faithfulness checks on `trials`
/// random instances of type `dims`.
pub fn verify_equivalence_roundtrip(dims: &[usize], trials: usize, seed: u64) -> Result<EquivalenceResiduals> {
    let typ = HigherOrderType::new(dims.to_vec())?;
    if typ.is_trivial() {
        return Err(Error::InvalidDimension("equivalence checks need at least one pair".into()));
    }
    let identity = {
        let f = functor_f(&SplitMorphism::identity(&typ))?;
        let id = Channel::identity(f.in_sys().clone(), f.out_sys().clone())?;
        channel_gap(&f, &id)?
    };
    let start = EquivalenceResiduals {
        identity,
        probe_separation: f64::INFINITY,
        ..Default::default()
    };
    (0..trials)
        .into_par_iter()
        .map(|i| one_trial(&typ, derive_seed(seed, 0xE0, i as u64)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .try_fold(start, |acc, r| Ok(acc.merge(r)))
}

/// `a ⊗ b` on default labels numbered across both factors.
fn tensor_channels(a: &Channel, b: &Channel) -> Result<Channel> {
    let b = b.relabeled(
        WireSystem::numbered("__bi", b.in_sys().dims())?,
        WireSystem::numbered("__bo", b.out_sys().dims())?,
    )?;
    let joint = a.tensor(&b)?;
    let (i, o) = default_systems(joint.in_sys().dims(), joint.out_sys().dims())?;
    joint.relabeled(i, o)
}

trait RelabelDefault: Sized {
    fn relabeled_default(&self, typ: &HigherOrderType) -> Result<Self>;
}

impl RelabelDefault for Channel {
    /// Splits a single-wire channel onto the pair dims of `typ`.
    fn relabeled_default(&self, typ: &HigherOrderType) -> Result<Channel> {
        let (i, o) = default_systems(typ.dims(), typ.dims())?;
        Channel::from_choi_data(self.choi().data().clone(), i, o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::higherorder::{is_deterministic_supermap, DEFAULT_ANCILLAS};
    use crate::hyperdec::{hypdec_map, maximally_mixed_state};

    fn typ(d: &[usize]) -> HigherOrderType {
        HigherOrderType::new(d.to_vec()).unwrap()
    }

    #[test]
    fn f_of_hypdec_is_identity() {
        for dims in [vec![2], vec![3], vec![2, 2]] {
            let f = functor_f(&SplitMorphism::identity(&typ(&dims))).unwrap();
            let id = Channel::identity(f.in_sys().clone(), f.out_sys().clone()).unwrap();
            assert!(channel_gap(&f, &id).unwrap() < 1e-12);
        }
    }

    #[test]
    fn f_of_maximally_mixed_is_maximally_mixed() {
        let m = maximally_mixed_state(&typ(&[2, 2]));
        let f = functor_f_unchecked(&m).unwrap();
        assert_eq!(f.in_dim(), 1);
        let expected = DMatrix::<C64>::identity(4, 4) * C64::new(0.25, 0.0);
        assert!((f.choi().data() - expected).norm() < 1e-14);
    }

    #[test]
    fn f_of_state_matches_output_at_maximally_mixed_input() {
        // oracle: the state-channel applied to I/d directly
        let t = typ(&[2]);
        let g = random_cptp(2, 2, 2, 9).unwrap();
        let s = HigherOrderMap::state_from_channel(&g, t).unwrap();
        let f = functor_f_unchecked(&s).unwrap();
        let mixed = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
        let direct = crate::channels::apply_channel_data(&g, &mixed).unwrap();
        assert!((f.choi().data() - direct).norm() < 1e-13);
    }

    #[test]
    fn g_of_identity_is_hypdec() {
        let g = functor_g(&Channel::identity_dim(2).unwrap()).unwrap();
        assert!(g.map().distance(hypdec_map(&typ(&[2])).map()).unwrap() < 1e-15);
    }

    #[test]
    fn g_is_deterministic_and_functorial() {
        let f1 = random_cptp(2, 2, 2, 1).unwrap();
        let f2 = random_cptp(2, 2, 3, 2).unwrap();
        let g1 = functor_g(&f1).unwrap();
        assert!(is_deterministic_supermap(g1.map(), 1e-9, &DEFAULT_ANCILLAS).unwrap());
        let lhs = functor_g(&f1.then(&f2).unwrap()).unwrap();
        let rhs = g1.then(&functor_g(&f2).unwrap()).unwrap();
        assert!(lhs.map().distance(rhs.map()).unwrap() < 1e-10);
    }

    #[test]
    fn g_rejects_non_cptp() {
        let f = random_cptp(2, 2, 2, 1).unwrap();
        let bad = Channel::from_choi_data(f.choi().data() * C64::new(1.5, 0.0), f.in_sys().clone(), f.out_sys().clone()).unwrap();
        assert!(matches!(functor_g(&bad), Err(Error::NotCptp)));
    }

    #[test]
    fn roundtrip_on_qubits_and_pairs() {
        let r = verify_equivalence_roundtrip(&[2], 4, 7).unwrap();
        assert!(r.max() < 1e-9, "{r:?}");
        assert!(r.probe_separation > 1e-3);
        let r = verify_equivalence_roundtrip(&[2, 2], 1, 7).unwrap();
        assert!(r.max() < 1e-9, "{r:?}");
    }

    #[test]
    fn f_preserves_tensor_of_single_pairs() {
        let (a, b) = (random_cptp(2, 2, 2, 3).unwrap(), random_cptp(2, 2, 2, 4).unwrap());
        let (ga, gb) = (functor_g(&a).unwrap(), functor_g(&b).unwrap());
        let joint = functor_f(&ga.tensor(&gb).unwrap()).unwrap();
        let expected = tensor_channels(&a, &b).unwrap();
        assert_eq!(joint.in_sys().dims(), &[2, 2]);
        assert!(channel_gap(&joint, &expected).unwrap() < 1e-12);
    }
}
