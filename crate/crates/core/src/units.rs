//! Physical constants, decibel conversions and the [`Gain`] newtype.

use serde::{Deserialize, Serialize};

/// Exact SI value, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Exact SI value, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Antenna gain carried in both representations.
///
/// Config files hold dBi; the linear value is derived once at load time so
/// the numerical code never converts again. Serialises as the dBi number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Gain {
    dbi: f64,
    linear: f64,
}

impl Gain {
    pub fn from_dbi(dbi: f64) -> Self {
        Gain {
            dbi,
            linear: db_to_linear(dbi),
        }
    }

    pub fn dbi(self) -> f64 {
        self.dbi
    }

    pub fn linear(self) -> f64 {
        self.linear
    }
}

impl From<f64> for Gain {
    fn from(dbi: f64) -> Self {
        Gain::from_dbi(dbi)
    }
}

impl From<Gain> for f64 {
    fn from(g: Gain) -> f64 {
        g.dbi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        assert!((linear_to_db(db_to_linear(2.5)) - 2.5).abs() < 1e-12);
        assert!((watts_to_dbm(1e-3)).abs() < 1e-12);
        assert!((dbm_to_watts(-48.0) - 1.584_893_192e-8).abs() < 1e-16);
    }

    #[test]
    fn gain_keeps_dbi_exactly() {
        let g = Gain::from_dbi(2.2);
        assert_eq!(g.dbi(), 2.2);
        assert!((g.linear() - 1.659_586_907).abs() < 1e-8);
    }
}
