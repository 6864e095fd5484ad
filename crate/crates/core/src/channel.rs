//! Attenuation of the quantum channel.
//!
//! Beer–Lambert transmittance over a horizontal plane-parallel path, the
//! built-in table of atmosphere extinction coefficients at 632.8 nm, inversion
//! of a transmittance into an equivalent path length, and a gas-cell
//! absorption estimate for the bromine-filled multipath cell.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Transmittance measured through the bromine-filled cell relative to vacuum.
pub const MEASURED_BROMINE_TRANSMITTANCE: f64 = 0.01;

/// Universal gas constant, J / (mol K).
pub const GAS_CONSTANT: f64 = 8.314_462_618;

/// Fraction of optical power surviving the channel, `P / P0`, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Transmittance(f64);

impl Transmittance {
    pub const UNITY: Transmittance = Transmittance(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::domain("transmittance", value, "in (0, 1]"))
        }
    }

    pub fn from_loss_db(loss_db: f64) -> Result<Self> {
        if !(loss_db >= 0.0 && loss_db.is_finite()) {
            return Err(Error::domain("loss_db", loss_db, "finite and >= 0"));
        }
        Self::new(10f64.powf(-loss_db / 10.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `exp(-k L)` for extinction coefficient `k` (1/km) over `L` km.
pub fn transmittance(k_per_km: f64, length_km: f64) -> Result<Transmittance> {
    if !(k_per_km >= 0.0 && k_per_km.is_finite()) {
        return Err(Error::domain("k_per_km", k_per_km, "finite and >= 0"));
    }
    if !(length_km >= 0.0 && length_km.is_finite()) {
        return Err(Error::domain("length_km", length_km, "finite and >= 0"));
    }
    let t = (-k_per_km * length_km).exp();
    // exp underflows to zero past ~745 optical depths
    Transmittance::new(t.max(f64::MIN_POSITIVE))
}

/// Path length (km) through an atmosphere with coefficient `k` giving transmittance `t`.
pub fn equivalent_path(k_per_km: f64, t: Transmittance) -> Result<f64> {
    if !(k_per_km >= 0.0 && k_per_km.is_finite()) {
        return Err(Error::domain("k_per_km", k_per_km, "finite and >= 0"));
    }
    if t.0 == 1.0 {
        return Ok(0.0);
    }
    if k_per_km == 0.0 {
        return Err(Error::NoFinitePath { transmittance: t.0 });
    }
    Ok(-t.0.ln() / k_per_km)
}

/// Channel loss in dB, `-10 log10(t)`.
pub fn loss_db(t: Transmittance) -> f64 {
    // avoids returning -0.0 for t = 1
    0.0 - 10.0 * t.0.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Season {
    Summer,
    Winter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aerosol {
    Urban,
    Rural,
}

impl Season {
    pub fn as_str(self) -> &'static str {
        match self {
            Season::Summer => "summer",
            Season::Winter => "winter",
        }
    }
}

impl Aerosol {
    pub fn as_str(self) -> &'static str {
        match self {
            Aerosol::Urban => "urban",
            Aerosol::Rural => "rural",
        }
    }
}

impl FromStr for Season {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "summer" => Ok(Season::Summer),
            "winter" => Ok(Season::Winter),
            other => Err(format!("unknown season `{other}`")),
        }
    }
}

impl FromStr for Aerosol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "urban" => Ok(Aerosol::Urban),
            "rural" => Ok(Aerosol::Rural),
            other => Err(format!("unknown aerosol class `{other}`")),
        }
    }
}

/// One atmosphere condition with its extinction coefficient at 632.8 nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereProfile {
    pub season: Season,
    pub aerosol: Aerosol,
    pub visibility_km: f64,
    pub k_per_km: f64,
}

impl AtmosphereProfile {
    pub fn new(season: Season, aerosol: Aerosol, visibility_km: f64, k_per_km: f64) -> Result<Self> {
        if !(visibility_km > 0.0 && visibility_km.is_finite()) {
            return Err(Error::domain("visibility_km", visibility_km, "> 0"));
        }
        if !(k_per_km > 0.0 && k_per_km.is_finite()) {
            return Err(Error::domain("k_per_km", k_per_km, "> 0"));
        }
        Ok(Self {
            season,
            aerosol,
            visibility_km,
            k_per_km,
        })
    }

    /// Short identifier such as `summer-urban-5km`.
    pub fn slug(&self) -> String {
        format!(
            "{}-{}-{}km",
            self.season.as_str(),
            self.aerosol.as_str(),
            self.visibility_km
        )
    }

    pub fn matches(&self, season: Season, aerosol: Aerosol, visibility_km: f64) -> bool {
        self.season == season
            && self.aerosol == aerosol
            && (self.visibility_km - visibility_km).abs() < 1e-9
    }
}

impl fmt::Display for AtmosphereProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} km (k = {} /km)",
            self.season.as_str(),
            self.aerosol.as_str(),
            self.visibility_km,
            self.k_per_km
        )
    }
}

const fn row(season: Season, aerosol: Aerosol, visibility_km: f64, k_per_km: f64) -> AtmosphereProfile {
    AtmosphereProfile {
        season,
        aerosol,
        visibility_km,
        k_per_km,
    }
}

use Aerosol::{Rural, Urban};
use Season::{Summer, Winter};

static PROFILES: [AtmosphereProfile; 8] = [
    row(Summer, Urban, 5.0, 0.262),
    row(Summer, Urban, 13.0, 0.0901),
    row(Summer, Rural, 5.0, 0.0460),
    row(Summer, Rural, 13.0, 0.0158),
    row(Winter, Urban, 5.0, 0.254),
    row(Winter, Urban, 13.0, 0.0838),
    row(Winter, Rural, 5.0, 0.0451),
    row(Winter, Rural, 13.0, 0.0155),
];

/// Equivalent path lengths (km) published alongside each row of the table,
/// for a transmittance of 0.01. Same order as [`profile_table`].
static REPORTED_PATHS_KM: [f64; 8] = [17.6, 51.1, 100.07, 290.9, 18.1, 52.7, 102.1, 270.0];

/// The eight built-in atmosphere profiles.
pub fn profile_table() -> &'static [AtmosphereProfile] {
    &PROFILES
}

pub fn lookup(season: Season, aerosol: Aerosol, visibility_km: f64) -> Option<AtmosphereProfile> {
    PROFILES
        .iter()
        .copied()
        .find(|p| p.matches(season, aerosol, visibility_km))
}

/// Published equivalent path for a built-in profile, if it is one.
pub fn reported_path_km(profile: &AtmosphereProfile) -> Option<f64> {
    PROFILES
        .iter()
        .position(|p| p == profile)
        .map(|i| REPORTED_PATHS_KM[i])
}

/// Formula path vs published path for one table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDeviation {
    pub profile: AtmosphereProfile,
    pub formula_km: f64,
    pub reported_km: f64,
}

impl PathDeviation {
    /// `(formula - reported) / reported`.
    pub fn relative_deviation(&self) -> f64 {
        (self.formula_km - self.reported_km) / self.reported_km
    }
}

/// Compares `-ln(t)/k` against the published path for every built-in row.
pub fn path_deviations(t: Transmittance) -> Vec<PathDeviation> {
    PROFILES
        .iter()
        .zip(REPORTED_PATHS_KM)
        .map(|(profile, reported_km)| PathDeviation {
            profile: *profile,
            // k > 0 for every built-in row
            formula_km: -t.0.ln() / profile.k_per_km,
            reported_km,
        })
        .collect()
}

/// Parses a user profile table: one `season, aerosol, visibility_km, k_per_km`
/// row per line, separated by commas or whitespace. `#` starts a comment line.
pub fn parse_profiles(text: &str) -> Result<Vec<AtmosphereProfile>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::ProfileParse {
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|c| !c.is_empty())
            .collect();
        if cols.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", cols.len())));
        }
        let season = cols[0].parse().map_err(err)?;
        let aerosol = cols[1].parse().map_err(err)?;
        let number = |name: &str, s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(format!("{name}: `{s}`: {e}")))
        };
        let visibility = number("visibility_km", cols[2])?;
        let k = number("k_per_km", cols[3])?;
        let profile =
            AtmosphereProfile::new(season, aerosol, visibility, k).map_err(|e| err(e.to_string()))?;
        out.push(profile);
    }
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<AtmosphereProfile>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_profiles(&text)
}

/// Base of the absorbance used with the molar absorptivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbsorbanceConvention {
    /// `T = 10^-A`, the usual convention for tabulated molar absorptivities.
    #[default]
    Decadic,
    /// `T = e^-A`.
    Natural,
}

/// Gas absorption cell filled to a given pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromineCell {
    /// cm⁻¹ (mol/L)⁻¹
    pub molar_absorptivity: f64,
    pub pressure_hpa: f64,
    pub temperature_k: f64,
    pub path_length_m: f64,
    pub convention: AbsorbanceConvention,
}

impl Default for BromineCell {
    fn default() -> Self {
        Self {
            molar_absorptivity: 1.3,
            pressure_hpa: 26.0,
            temperature_k: 293.0,
            path_length_m: 22.4,
            convention: AbsorbanceConvention::Decadic,
        }
    }
}

impl BromineCell {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("molar_absorptivity", self.molar_absorptivity),
            ("pressure_hpa", self.pressure_hpa),
            ("temperature_k", self.temperature_k),
            ("path_length_m", self.path_length_m),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::domain(name, value, "> 0"));
            }
        }
        Ok(())
    }

    /// Ideal-gas molar concentration in mol/L.
    pub fn concentration_mol_per_l(&self) -> f64 {
        let pascal = self.pressure_hpa * 100.0;
        let mol_per_m3 = pascal / (GAS_CONSTANT * self.temperature_k);
        mol_per_m3 / 1000.0
    }

    /// `A = epsilon c l` with `l` in cm.
    pub fn absorbance(&self) -> f64 {
        self.molar_absorptivity * self.concentration_mol_per_l() * self.path_length_m * 100.0
    }
}

/// Transmittance predicted for the cell from its gas fill.
pub fn bromine_transmittance(cell: &BromineCell) -> Transmittance {
    let a = cell.absorbance();
    let t = match cell.convention {
        AbsorbanceConvention::Decadic => 10f64.powf(-a),
        AbsorbanceConvention::Natural => (-a).exp(),
    };
    Transmittance(t.clamp(f64::MIN_POSITIVE, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn transmittance_examples() {
        assert_eq!(transmittance(0.0, 100.0).unwrap().value(), 1.0);
        assert_abs_diff_eq!(transmittance(0.262, 17.6).unwrap().value(), 0.009_939_883_288_322_92, epsilon = 1e-15);
        // mpmath: exp(-1)
        assert_relative_eq!(transmittance(0.1, 10.0).unwrap().value(), 0.367_879_441_171_442_32, max_relative = 1e-15);
    }

    #[test]
    fn transmittance_rejects_negative_inputs() {
        assert!(transmittance(-0.1, 1.0).is_err());
        assert!(transmittance(0.1, -1.0).is_err());
        assert!(transmittance(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn equivalent_path_examples() {
        let t01 = Transmittance::new(0.01).unwrap();
        assert_eq!(equivalent_path(0.3, Transmittance::UNITY).unwrap(), 0.0);
        assert_abs_diff_eq!(equivalent_path(0.0460, t01).unwrap(), 100.1, epsilon = 0.05);
        assert_abs_diff_eq!(equivalent_path(0.0901, t01).unwrap(), 51.1, epsilon = 0.05);
        assert_eq!(equivalent_path(0.0, Transmittance::UNITY).unwrap(), 0.0);
        assert!(matches!(equivalent_path(0.0, t01), Err(Error::NoFinitePath { .. })));
    }

    #[test]
    fn transmittance_newtype_bounds() {
        assert!(Transmittance::new(0.0).is_err());
        assert!(Transmittance::new(1.0 + 1e-12).is_err());
        assert!(Transmittance::new(-0.5).is_err());
        assert!(Transmittance::new(1.0).is_ok());
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss_db(Transmittance::UNITY), 0.0);
        assert!(loss_db(Transmittance::UNITY).is_sign_positive());
        assert_eq!(loss_db(Transmittance::new(0.01).unwrap()), 20.0);
        assert_eq!(loss_db(Transmittance::new(0.1).unwrap()), 10.0);
        assert_abs_diff_eq!(loss_db(Transmittance::from_loss_db(157.0).unwrap()), 157.0, epsilon = 1e-9);
    }

    #[test]
    fn table_contents() {
        let table = profile_table();
        assert_eq!(table.len(), 8);
        assert_eq!(lookup(Summer, Urban, 5.0).unwrap().k_per_km, 0.262);
        assert_eq!(lookup(Winter, Rural, 5.0).unwrap().k_per_km, 0.0451);
        assert!(lookup(Winter, Rural, 7.0).is_none());
        assert_eq!(table[3].slug(), "summer-rural-13km");
        assert_eq!(reported_path_km(&table[3]), Some(290.9));
    }

    #[test]
    fn path_deviation_rows() {
        // mpmath: -ln(0.01)/k for every row
        let oracle = [
            17.576_985_442_702_64,
            51.111_766_770_123_1,
            100.112_395_347_567_2,
            291.466_467_467_600_7,
            18.130_591_283_417_68,
            54.954_298_162_149_06,
            102.110_203_680_445_5,
            297.107_753_934_715_6,
        ];
        let rows = path_deviations(Transmittance::new(0.01).unwrap());
        for (row, expected) in rows.iter().zip(oracle) {
            assert_relative_eq!(row.formula_km, expected, max_relative = 1e-12);
        }
        let within: Vec<bool> = rows.iter().map(|r| r.relative_deviation().abs() < 0.01).collect();
        assert_eq!(within, [true, true, true, true, true, false, true, false]);
        assert_abs_diff_eq!(rows[5].relative_deviation(), 0.042_776, epsilon = 1e-5);
    }

    #[test]
    fn bromine_cell_hand_calculation() {
        // c = 2600 Pa / (R * 293 K) = 1.067263e-3 mol/L, A = 1.3 * c * 2240 cm = 3.107870
        let cell = BromineCell::default();
        assert_relative_eq!(cell.concentration_mol_per_l(), 1.067_263_218_828_843e-3, max_relative = 1e-12);
        assert_relative_eq!(cell.absorbance(), 3.107_870_493_229_592, max_relative = 1e-12);
        assert_relative_eq!(bromine_transmittance(&cell).value(), 7.800_626_908_182_035e-4, max_relative = 1e-10);

        let natural = BromineCell {
            convention: AbsorbanceConvention::Natural,
            ..cell
        };
        assert_relative_eq!(bromine_transmittance(&natural).value(), 0.044_696_034_576_646_68, max_relative = 1e-10);

        let clear = BromineCell {
            molar_absorptivity: 1e-300,
            ..cell
        };
        assert_eq!(bromine_transmittance(&clear).value(), 1.0);
    }

    #[test]
    fn bromine_cell_validation() {
        assert!(BromineCell::default().validate().is_ok());
        let bad = BromineCell {
            pressure_hpa: 0.0,
            ..BromineCell::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn parse_profile_file() {
        let text = "# season, aerosol, visibility_km, k_per_km\n\
                    summer, urban, 5, 0.262\n\
                    \n\
                    winter rural 23 0.01\n";
        let rows = parse_profiles(text).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].visibility_km, 23.0);
        assert_eq!(rows[1].season, Winter);
    }

    #[test]
    fn parse_profile_errors_carry_line() {
        let err = parse_profiles("summer, urban, 5\n").unwrap_err();
        assert!(matches!(err, Error::ProfileParse { line: 1, .. }));
        let err = parse_profiles("# ok\nspring, urban, 5, 0.1\n").unwrap_err();
        assert!(matches!(err, Error::ProfileParse { line: 2, .. }));
        let err = parse_profiles("summer, urban, 5, -0.1\n").unwrap_err();
        assert!(matches!(err, Error::ProfileParse { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn round_trip(k in 1e-3f64..10.0, length in 0.0f64..1e3) {
            let t = transmittance(k, length).unwrap();
            prop_assume!(t.value() > f64::MIN_POSITIVE);
            let back = equivalent_path(k, t).unwrap();
            if length == 0.0 {
                prop_assert_eq!(back, 0.0);
            } else {
                prop_assert!(((back - length) / length).abs() <= 1e-10);
            }
        }

        #[test]
        fn composable(k in 0.0f64..10.0, l1 in 0.0f64..50.0, l2 in 0.0f64..50.0) {
            let joint = transmittance(k, l1 + l2).unwrap().value();
            let split = transmittance(k, l1).unwrap().value() * transmittance(k, l2).unwrap().value();
            prop_assert!((joint - split).abs() <= 1e-12);
        }

        #[test]
        fn monotone(k in 1e-3f64..5.0, length in 1e-3f64..100.0, dk in 1e-3f64..1.0, dl in 1e-3f64..10.0) {
            let base = transmittance(k, length).unwrap();
            prop_assert!(transmittance(k + dk, length).unwrap() < base);
            prop_assert!(transmittance(k, length + dl).unwrap() < base);
            prop_assert!(loss_db(transmittance(k, length + dl).unwrap()) > loss_db(base));
        }
    }
}
