use rayon::prelude::*;

use super::nonsignalling::{
    local_cptp_basis, nonsignalling_defect, trace_preservation_defect, ProductBasis,
};
use super::types::{HigherOrderMap, IN, OUT};
use crate::error::Result;
use crate::tensorcore::{link_product, ComplexMatrix, WireSystem, C64};

/// Ancilla pair dimensions tried when none are given.
pub const DEFAULT_ANCILLAS: [usize; 2] = [1, 2];

const ANC_B: &str = "anc.b";
const ANC_T: &str = "anc.t";

/// Worst TP/NS defect of `(s ⊗ id_[L,L])(J)` over the affine basis of
/// non-signalling inputs on `source ⊗ [L,L]`. Returns `None` when the
/// Choi matrix of `s` is not PSD.
pub fn deterministic_defect(s: &HigherOrderMap, tol: f64, ancilla_dims: &[usize]) -> Result<Option<f64>> {
    if !s.choi().is_psd(tol) {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for &l in ancilla_dims {
        worst = worst.max(defect_with_ancilla(s, l)?);
    }
    Ok(Some(worst))
}

pub fn is_deterministic_supermap(s: &HigherOrderMap, tol: f64, ancilla_dims: &[usize]) -> Result<bool> {
    Ok(matches!(deterministic_defect(s, tol, ancilla_dims)?, Some(d) if d <= tol))
}

fn defect_with_ancilla(s: &HigherOrderMap, l: usize) -> Result<f64> {
    let src = s.source();
    let tgt = s.target();
    let in_sys = src.wires(IN);
    let basis = ProductBasis::new(src.dims())?;
    // the ancilla wires pass through the link untouched, so the image of
    // E_src ⊗ E_anc is image(E_src) ⊗ E_anc
    let images = (0..basis.len())
        .into_par_iter()
        .map(|k| {
            let e = ComplexMatrix::square(basis.element(k), in_sys.clone())?;
            link_product(&e, s.choi(), in_sys.labels())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tops = tgt.tops(OUT);
    let mut parties = tgt.parties(OUT);
    let ancillas = if l > 1 {
        tops.push(ANC_T.to_string());
        parties.push((ANC_B.to_string(), ANC_T.to_string()));
        let anc_sys = WireSystem::new(vec![l, l], vec![ANC_B, ANC_T])?;
        local_cptp_basis(l)?
            .iter()
            .map(|m| ComplexMatrix::square(m.clone(), anc_sys.clone()))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![ComplexMatrix::scalar(C64::new(1.0, 0.0))]
    };
    let n_anc = ancillas.len();
    let defects = (0..images.len() * n_anc)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let image = images[idx / n_anc].tensor_product(&ancillas[idx % n_anc])?;
            let tp = trace_preservation_defect(&image, &tops)?;
            let ns = nonsignalling_defect(&image, &parties)?;
            Ok(tp.max(ns))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Deterministic supermaps are closed under `then` and `tensor`; this helper
/// checks both for a pair.
pub fn closure_defect(a: &HigherOrderMap, b: &HigherOrderMap, tol: f64) -> Result<Option<f64>> {
    let mut worst = 0.0f64;
    for m in [a.then(b)?, a.tensor(b)?] {
        match deterministic_defect(&m, tol, &DEFAULT_ANCILLAS)? {
            Some(d) => worst = worst.max(d),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{random_cptp, Channel};
    use crate::higherorder::HigherOrderType;
    use crate::higherorder::effects::random_nonsignalling_state;
    use crate::tensorcore::DEFAULT_TOL;
    use nalgebra::DMatrix;

    fn type_of(dims: &[usize]) -> Result<HigherOrderType> {
        HigherOrderType::new(dims.to_vec())
    }

    fn qubit() -> HigherOrderType {
        type_of(&[2]).unwrap()
    }

    fn random_comb(seed: u64) -> HigherOrderMap {
        let pre = random_cptp(2, 4, 2, seed).unwrap();
        let post = random_cptp(4, 2, 2, seed + 1).unwrap();
        HigherOrderMap::comb(qubit(), qubit(), &pre, &post, &[2]).unwrap()
    }

    #[test]
    fn identity_is_deterministic() {
        for dims in [vec![2], vec![3], vec![2, 2]] {
            let id = HigherOrderMap::identity(&type_of(&dims).unwrap());
            assert!(is_deterministic_supermap(&id, DEFAULT_TOL, &DEFAULT_ANCILLAS).unwrap());
        }
    }

    #[test]
    fn combs_are_deterministic_and_closed() {
        let a = random_comb(1);
        let b = random_comb(3);
        assert!(is_deterministic_supermap(&a, 1e-9, &DEFAULT_ANCILLAS).unwrap());
        assert!(closure_defect(&a, &b, 1e-9).unwrap().unwrap() < 1e-9);
    }

    #[test]
    fn transpose_is_not_deterministic() {
        // g ↦ transpose ∘ g on the top: Choi on (in:t, out:t) is the swap, not PSD
        let typ = qubit();
        let mut swap = DMatrix::<C64>::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(i * 2 + j, j * 2 + i)] = C64::new(1.0, 0.0);
            }
        }
        let phi = super::super::types::max_entangled(2);
        let m = ComplexMatrix::square(
            phi.kronecker(&swap),
            WireSystem::new(vec![2, 2, 2, 2], vec!["in:p0.b", "out:p0.b", "in:p0.t", "out:p0.t"]).unwrap(),
        )
        .unwrap();
        let t = HigherOrderMap::new(m, typ.clone(), typ).unwrap();
        assert!(!is_deterministic_supermap(&t, DEFAULT_TOL, &DEFAULT_ANCILLAS).unwrap());
    }

    #[test]
    fn non_trace_preserving_supermap_fails() {
        let typ = qubit();
        let id = HigherOrderMap::identity(&typ);
        let scaled = HigherOrderMap::new(id.choi().scale_real(0.5), typ.clone(), typ).unwrap();
        assert!(!is_deterministic_supermap(&scaled, DEFAULT_TOL, &DEFAULT_ANCILLAS).unwrap());
    }

    #[test]
    fn deterministic_states_pass_as_maps_from_trivial() {
        let s = random_nonsignalling_state(&type_of(&[2, 2]).unwrap(), 3).unwrap();
        assert!(is_deterministic_supermap(&s, 1e-9, &[1]).unwrap());
        let g = random_cptp(2, 2, 2, 4).unwrap();
        let s1 = HigherOrderMap::state_from_channel(&g, qubit()).unwrap();
        assert!(is_deterministic_supermap(&s1, 1e-9, &DEFAULT_ANCILLAS).unwrap());
        let bad = Channel::from_choi_data(
            g.choi().data() * C64::new(2.0, 0.0),
            g.in_sys().clone(),
            g.out_sys().clone(),
        )
        .unwrap();
        let s2 = HigherOrderMap::state_from_channel(&bad, qubit()).unwrap();
        assert!(!is_deterministic_supermap(&s2, 1e-9, &DEFAULT_ANCILLAS).unwrap());
    }
}
