//! Decibel helpers.

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * db_to_lin(dbm)
}

#[inline]
pub fn w_to_dbm(w: f64) -> f64 {
    lin_to_db(w / 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn dbm_round_trip(dbm in -200.0f64..100.0) {
            let back = w_to_dbm(dbm_to_w(dbm));
            prop_assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }

        #[test]
        fn watt_round_trip(w in 1e-15f64..1e6) {
            let back = dbm_to_w(w_to_dbm(w));
            prop_assert!(((back - w) / w).abs() <= 1e-12);
        }
    }

    #[test]
    fn reference_points() {
        assert_eq!(w_to_dbm(1e-3), 0.0);
        assert!((dbm_to_w(30.0) - 1.0).abs() < 1e-15);
    }
}
