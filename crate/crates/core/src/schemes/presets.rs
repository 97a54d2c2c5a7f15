//! Named scheme setups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transmission scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Asymmetric two-slot PNC with lattice EM (plus correction slot).
    Alem,
    /// Symmetric four-slot PNC with lattice EM.
    Slem,
    /// Symmetric four-slot PNC with polar codes and QAM.
    Stem,
    /// Per-frame choice between ALEM and SLEM.
    Dlem,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Alem => "alem",
            SchemeKind::Slem => "slem",
            SchemeKind::Stem => "stem",
            SchemeKind::Dlem => "dlem",
        }
    }
}

/// Code rates of the QAM baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StemRates {
    /// Slots 1 and 2, 8QAM.
    pub pnc: f64,
    /// Slot 3, 16QAM.
    pub slot3: f64,
    /// Slot 4, 8QAM.
    pub slot4: f64,
}

/// Full rate setup of one scheme.
///
/// Lattice rates list `R_1..R_{L-1}`. `rates_a` is user A's uplink setup
/// (also used by B in the symmetric PNC slot), `rates_b` user B's full
/// setup (uplink in ALEM, P2P slot 3 in SLEM), `rates_relay` the relay's
/// downlink setup and `rates_slot0` the correction-signal link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub kind: SchemeKind,
    pub n: usize,
    /// Bandwidth in symbols per second.
    pub w: f64,
    pub rates_a: Vec<f64>,
    pub rates_b: Vec<f64>,
    pub rates_relay: Vec<f64>,
    pub rates_slot0: Vec<f64>,
    #[serde(default)]
    pub stem: Option<StemRates>,
    #[serde(default = "one")]
    pub o_pw: f64,
    #[serde(default)]
    pub o_ph: f64,
    /// Where the rates come from.
    pub source: String,
}

fn one() -> f64 {
    1.0
}

const N: usize = 256;
const W: f64 = 1e6;

fn lattice(name: &str, kind: SchemeKind, a: &[f64], b: &[f64], source: &str) -> Preset {
    Preset {
        name: name.to_string(),
        kind,
        n: N,
        w: W,
        rates_a: a.to_vec(),
        rates_b: b.to_vec(),
        rates_relay: a.to_vec(),
        rates_slot0: a.to_vec(),
        stem: None,
        o_pw: 1.0,
        o_ph: 0.0,
        source: source.to_string(),
    }
}

/// Every registered preset, in listing order.
pub fn all_presets() -> Vec<Preset> {
    let mut out = Vec::new();
    let t1: [(usize, [f64; 3], f64, StemRates); 3] = [
        (
            537,
            [0.003, 0.45, 0.65],
            1.0,
            StemRates {
                pnc: 0.37,
                slot3: 0.53,
                slot4: 0.37,
            },
        ),
        (
            588,
            [0.003, 0.45, 0.85],
            1.0,
            StemRates {
                pnc: 0.43,
                slot3: 0.58,
                slot4: 0.43,
            },
        ),
        (
            639,
            [0.003, 0.55, 0.95],
            1.0,
            StemRates {
                pnc: 0.50,
                slot3: 0.63,
                slot4: 0.50,
            },
        ),
    ];
    for (kb, a, r4, stem) in t1 {
        let b = [a[0], a[1], a[2], r4];
        let src = format!("Table I, K_B={kb}");
        out.push(lattice(
            &format!("table1-alem-{kb}"),
            SchemeKind::Alem,
            &a,
            &b,
            &src,
        ));
        out.push(lattice(
            &format!("table1-slem-{kb}"),
            SchemeKind::Slem,
            &a,
            &b,
            &src,
        ));
        let mut s = lattice(&format!("table1-stem-{kb}"), SchemeKind::Stem, &a, &b, &src);
        s.stem = Some(stem);
        out.push(s);
    }
    for (kb, r4) in [(385, 0.56), (472, 0.90)] {
        let a = [0.003, 0.40, 0.55];
        let b = [0.003, 0.40, 0.55, r4];
        let src = format!("Table II, K_B={kb}");
        out.push(lattice(
            &format!("table2-alem-{kb}"),
            SchemeKind::Alem,
            &a,
            &b,
            &src,
        ));
        out.push(lattice(
            &format!("table2-slem-{kb}"),
            SchemeKind::Slem,
            &a,
            &b,
            &src,
        ));
    }
    out.push(lattice(
        "table3-alem-614",
        SchemeKind::Alem,
        &[0.003, 0.45, 0.95],
        &[0.003, 0.45, 0.95, 1.0],
        "Table III, K_B=614",
    ));
    for kb in [385, 472] {
        let r4 = if kb == 385 { 0.56 } else { 0.90 };
        let a = [0.003, 0.40, 0.55];
        let b = [0.003, 0.40, 0.55, r4];
        out.push(lattice(
            &format!("dlem-{kb}"),
            SchemeKind::Dlem,
            &a,
            &b,
            &format!("Table II, K_B={kb}, dynamic selection"),
        ));
    }
    out.push(lattice(
        "uncoded-alem",
        SchemeKind::Alem,
        &[1.0, 1.0, 1.0],
        &[1.0, 1.0, 1.0, 1.0],
        "uncoded lattice baseline (every level rate 1)",
    ));
    out
}

pub fn preset(name: &str) -> Result<Preset> {
    all_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}
