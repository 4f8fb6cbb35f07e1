use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the eight ABO/RhD blood groups.
///
/// Serialized as the exact strings `"A+"`, `"A-"`, `"B+"`, `"B-"`, `"AB+"`,
/// `"AB-"`, `"O+"`, `"O-"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BloodGroup {
    APos,
    ANeg,
    BPos,
    BNeg,
    AbPos,
    AbNeg,
    OPos,
    ONeg,
}

impl BloodGroup {
    pub const ALL: [BloodGroup; 8] = [
        BloodGroup::APos,
        BloodGroup::ANeg,
        BloodGroup::BPos,
        BloodGroup::BNeg,
        BloodGroup::AbPos,
        BloodGroup::AbNeg,
        BloodGroup::OPos,
        BloodGroup::ONeg,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            BloodGroup::APos => "A+",
            BloodGroup::ANeg => "A-",
            BloodGroup::BPos => "B+",
            BloodGroup::BNeg => "B-",
            BloodGroup::AbPos => "AB+",
            BloodGroup::AbNeg => "AB-",
            BloodGroup::OPos => "O+",
            BloodGroup::ONeg => "O-",
        }
    }

    pub const fn is_rh_positive(self) -> bool {
        matches!(
            self,
            BloodGroup::APos | BloodGroup::BPos | BloodGroup::AbPos | BloodGroup::OPos
        )
    }
}

impl fmt::Display for BloodGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid blood group {0:?}: expected one of A+, A-, B+, B-, AB+, AB-, O+, O-")]
pub struct ParseBloodGroupError(pub String);

impl FromStr for BloodGroup {
    type Err = ParseBloodGroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BloodGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| ParseBloodGroupError(s.to_owned()))
    }
}

impl TryFrom<String> for BloodGroup {
    type Error = ParseBloodGroupError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<BloodGroup> for String {
    fn from(g: BloodGroup) -> Self {
        g.as_str().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Antigen {
    A,
    B,
    RhD,
}

impl Antigen {
    const fn bit(self) -> u8 {
        match self {
            Antigen::A => 0b001,
            Antigen::B => 0b010,
            Antigen::RhD => 0b100,
        }
    }
}

/// A subset of {A, B, RhD}, stored as a 3-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AntigenSet(u8);

impl AntigenSet {
    pub const EMPTY: AntigenSet = AntigenSet(0);

    pub fn from_antigens(antigens: impl IntoIterator<Item = Antigen>) -> Self {
        AntigenSet(antigens.into_iter().fold(0, |mask, a| mask | a.bit()))
    }

    pub const fn contains(self, antigen: Antigen) -> bool {
        self.0 & antigen.bit() != 0
    }

    pub const fn is_subset_of(self, other: AntigenSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn iter(self) -> impl Iterator<Item = Antigen> {
        [Antigen::A, Antigen::B, Antigen::RhD]
            .into_iter()
            .filter(move |a| self.contains(*a))
    }
}

/// Antigens carried by red cells of group `g`.
pub fn antigens_of(g: BloodGroup) -> AntigenSet {
    use Antigen::*;
    let abo: &[Antigen] = match g {
        BloodGroup::APos | BloodGroup::ANeg => &[A],
        BloodGroup::BPos | BloodGroup::BNeg => &[B],
        BloodGroup::AbPos | BloodGroup::AbNeg => &[A, B],
        BloodGroup::OPos | BloodGroup::ONeg => &[],
    };
    let rh: &[Antigen] = if g.is_rh_positive() { &[RhD] } else { &[] };
    AntigenSet::from_antigens(abo.iter().chain(rh).copied())
}

/// A donor may give to a recipient when the donor introduces no antigen the
/// recipient lacks.
pub fn is_compatible(donor: BloodGroup, recipient: BloodGroup) -> bool {
    antigens_of(donor).is_subset_of(antigens_of(recipient))
}

/// Every group that can donate to `recipient`, in [`BloodGroup::ALL`] order.
pub fn compatible_donor_groups(recipient: BloodGroup) -> Vec<BloodGroup> {
    BloodGroup::ALL
        .into_iter()
        .filter(|d| is_compatible(*d, recipient))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    // Independent oracle: read antigens straight off the printed symbol.
    fn symbol_antigens(symbol: &str) -> BTreeSet<&'static str> {
        let (abo, sign) = symbol.split_at(symbol.len() - 1);
        let mut set = BTreeSet::new();
        if abo.contains('A') {
            set.insert("A");
        }
        if abo.contains('B') {
            set.insert("B");
        }
        if sign == "+" {
            set.insert("RhD");
        }
        set
    }

    fn as_names(set: AntigenSet) -> BTreeSet<&'static str> {
        set.iter()
            .map(|a| match a {
                Antigen::A => "A",
                Antigen::B => "B",
                Antigen::RhD => "RhD",
            })
            .collect()
    }

    #[test]
    fn antigens_match_symbol_oracle() {
        for g in BloodGroup::ALL {
            assert_eq!(as_names(antigens_of(g)), symbol_antigens(g.as_str()), "{g}");
        }
        assert!(antigens_of(BloodGroup::ONeg).is_empty());
        assert_eq!(antigens_of(BloodGroup::AbPos).len(), 3);
        assert_eq!(
            antigens_of(BloodGroup::APos),
            AntigenSet::from_antigens([Antigen::A, Antigen::RhD])
        );
    }

    #[test]
    fn antigen_sets_are_a_bijection() {
        let distinct: BTreeSet<u8> = BloodGroup::ALL.iter().map(|g| antigens_of(*g).0).collect();
        assert_eq!(distinct.len(), 8);
    }

    #[test]
    fn parse_render_round_trip() {
        for g in BloodGroup::ALL {
            assert_eq!(g.as_str().parse::<BloodGroup>().unwrap(), g);
        }
        for bad in ["", "C+", "a+", "AB", "O", "AB+ ", "0-", "BA+"] {
            assert!(bad.parse::<BloodGroup>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn serde_uses_plain_symbols() {
        let json = serde_json::to_string(&BloodGroup::AbNeg).unwrap();
        assert_eq!(json, "\"AB-\"");
        let g: BloodGroup = serde_json::from_str("\"O+\"").unwrap();
        assert_eq!(g, BloodGroup::OPos);
        assert!(serde_json::from_str::<BloodGroup>("\"C+\"").is_err());
    }

    #[test]
    fn spot_checks() {
        assert!(is_compatible(BloodGroup::ONeg, BloodGroup::AbPos));
        assert!(!is_compatible(BloodGroup::APos, BloodGroup::ANeg));
        for g in BloodGroup::ALL {
            assert!(is_compatible(g, g));
        }
        assert_eq!(compatible_donor_groups(BloodGroup::AbPos).len(), 8);
        assert_eq!(compatible_donor_groups(BloodGroup::ONeg), vec![BloodGroup::ONeg]);
        assert_eq!(
            compatible_donor_groups(BloodGroup::ANeg),
            vec![BloodGroup::ANeg, BloodGroup::ONeg]
        );
    }

    #[test]
    fn exhaustive_pairs_against_oracle() {
        let mut compatible = 0;
        for d in BloodGroup::ALL {
            for r in BloodGroup::ALL {
                let oracle = symbol_antigens(d.as_str()).is_subset(&symbol_antigens(r.as_str()));
                assert_eq!(is_compatible(d, r), oracle, "{d} -> {r}");
                compatible += oracle as usize;
            }
        }
        assert_eq!(compatible, 27);
        let total: usize = BloodGroup::ALL
            .iter()
            .map(|r| compatible_donor_groups(*r).len())
            .sum();
        assert_eq!(total, 27);
    }

    #[test]
    fn compatibility_is_a_partial_order() {
        for a in BloodGroup::ALL {
            for b in BloodGroup::ALL {
                if a != b {
                    assert!(!(is_compatible(a, b) && is_compatible(b, a)), "{a} <-> {b}");
                }
                for c in BloodGroup::ALL {
                    if is_compatible(a, b) && is_compatible(b, c) {
                        assert!(is_compatible(a, c), "{a} -> {b} -> {c}");
                    }
                }
            }
        }
    }
}
