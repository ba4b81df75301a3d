//! Independent reference implementations and frozen reference values, shared
//! by the unit-level oracle tests and the acceptance run.
#![allow(dead_code)]

use keyprosody_core::stats::Metric;

/// Direct pairwise definition: observed disagreement averaged within units
/// (weighted by 1/(m_u - 1)), expected disagreement over all ordered pairs
/// of pairable values.
pub fn brute_alpha(matrix: &[Vec<Option<f64>>], metric: Metric) -> Option<f64> {
    let units: Vec<Vec<f64>> = matrix
        .iter()
        .map(|r| r.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let all: Vec<f64> = units.iter().flatten().copied().collect();
    let n = all.len() as f64;
    if all.len() < 2 {
        return None;
    }
    let delta = |a: f64, b: f64| -> f64 {
        match metric {
            Metric::Nominal => (a != b) as u8 as f64,
            Metric::Interval => (a - b).powi(2),
            Metric::Ordinal => {
                // ranks of values by frequency: sum of counts from a to b minus half the ends
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let count = |v: f64| all.iter().filter(|x| **x == v).count() as f64;
                let between: f64 = all.iter().filter(|x| **x >= lo && **x <= hi).count() as f64;
                (between - (count(a) + count(b)) / 2.0).powi(2)
            }
        }
    };
    let mut d_o = 0.0;
    for u in &units {
        let m = u.len() as f64;
        let mut s = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j {
                    s += delta(u[i], u[j]);
                }
            }
        }
        d_o += s / (m - 1.0);
    }
    d_o /= n;
    let mut d_e = 0.0;
    for i in 0..all.len() {
        for j in 0..all.len() {
            if i != j {
                d_e += delta(all[i], all[j]);
            }
        }
    }
    d_e /= n * (n - 1.0);
    (d_e > 0.0).then(|| 1.0 - d_o / d_e)
}

/// Enumerates all 2^n sign assignments of the average ranks.
pub fn enumerate_p(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|x| *x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

/// Double Metaphone codes frozen from the Python `metaphone` package. An
/// empty alternate there means "same as primary" here.
pub const CODES: &[(&str, &str, &str)] = &[
    ("Jimi", "JM", "AM"),
    ("Jimmy", "JM", "AM"),
    ("Hendrix", "HNTRKS", ""),
    ("Hendricks", "HNTRKS", ""),
    ("Smith", "SM0", "XMT"),
    ("Smyth", "SM0", "XMT"),
    ("Schmidt", "XMT", "SMT"),
    ("Schmitt", "XMT", "SMT"),
    ("Thomas", "TMS", ""),
    ("Tomas", "TMS", ""),
    ("Philip", "FLP", ""),
    ("Filip", "FLP", ""),
    ("Catherine", "K0RN", "KTRN"),
    ("Katherine", "K0RN", "KTRN"),
    ("Stephen", "STFN", ""),
    ("Steven", "STFN", ""),
    ("Aretha", "AR0", "ART"),
    ("Areta", "ART", ""),
    ("Franklin", "FRNKLN", ""),
    ("Franklyn", "FRNKLN", ""),
    ("Queen", "KN", ""),
    ("Kween", "KN", ""),
    ("Mercury", "MRKR", ""),
    ("Merkury", "MRKR", ""),
    ("Freddie", "FRT", ""),
    ("Freddy", "FRT", ""),
    ("Beyonce", "PNS", ""),
    ("Beyonse", "PNS", ""),
    ("Chopin", "XPN", ""),
    ("Shopin", "XPN", ""),
    ("Nietzsche", "NTSX", ""),
    ("Nietsche", "NTX", ""),
    ("Tchaikovsky", "XKFSK", ""),
    ("Chaikovsky", "XKFSK", ""),
    ("Michael", "MKL", "MXL"),
    ("Micheal", "MXL", "MKL"),
    ("Elizabeth", "ALSP0", "ALSPT"),
    ("Elisabeth", "ALSP0", "ALSPT"),
    ("Caesar", "SSR", ""),
    ("Ceasar", "SSR", ""),
    ("Knight", "NT", ""),
    ("Nite", "NT", ""),
    ("Wright", "RT", ""),
    ("Rite", "RT", ""),
    ("Phoenix", "FNKS", ""),
    ("Fenix", "FNKS", ""),
    ("Xavier", "SF", "SFR"),
    ("Zavier", "SF", "SFR"),
    ("Bach", "PK", ""),
    ("Bakh", "PK", ""),
    ("Gandhi", "KNT", ""),
    ("Ghandi", "KNT", ""),
    ("Sean", "SN", ""),
    ("Shawn", "XN", ""),
    ("Zachary", "SKR", ""),
    ("Zackary", "SKR", ""),
    ("Geoffrey", "JFR", "KFR"),
    ("Jeffrey", "JFR", "AFR"),
    ("Kristen", "KRSTN", ""),
    ("Christen", "KRSTN", ""),
    ("Houston", "HSTN", ""),
    ("Hewston", "HSTN", ""),
    ("Broncos", "PRNKS", ""),
    ("Bronkos", "PRNKS", ""),
    ("Carolina", "KRLN", ""),
    ("Karolina", "KRLN", ""),
    ("Panthers", "PN0RS", "PNTRS"),
    ("Panthurs", "PN0RS", "PNTRS"),
    ("Normandy", "NRMNT", ""),
    ("Normandie", "NRMNT", ""),
    ("Warsaw", "ARS", "FRSF"),
    ("Warsau", "ARS", "FRS"),
    ("Tesla", "TSL", ""),
    ("Tessla", "TSL", ""),
    ("Denver", "TNFR", ""),
    ("Denvor", "TNFR", ""),
];

/// Misspellings whose primary codes agree, so correctness is 1.0.
pub const SAME_CODE_PAIRS: &[(&str, &str)] = &[
    ("Jimi Hendrix", "Jimmy Hendricks"),
    ("Smith", "Smyth"),
    ("Schmidt", "Schmitt"),
    ("Thomas", "Tomas"),
    ("Philip", "Filip"),
    ("Catherine", "Katherine"),
    ("Stephen", "Steven"),
    ("Aretha Franklin", "Aretha Franklyn"),
    ("Queen", "Kween"),
    ("Freddie Mercury", "Freddy Merkury"),
    ("Beyonce", "Beyonse"),
    ("Chopin", "Shopin"),
    ("Tchaikovsky", "Chaikovsky"),
    ("Elizabeth", "Elisabeth"),
    ("Caesar", "Ceasar"),
    ("Knight", "Nite"),
    ("Wright", "Rite"),
    ("Phoenix", "Fenix"),
    ("Xavier", "Zavier"),
    ("Bach", "Bakh"),
    ("Gandhi", "Ghandi"),
    ("Zachary", "Zackary"),
    ("Kristen", "Christen"),
    ("Houston", "Hewston"),
    ("Denver Broncos", "Denvor Bronkos"),
    ("Carolina Panthers", "Karolina Panthurs"),
    ("Normandy", "Normandie"),
    ("Tesla", "Tessla"),
];
