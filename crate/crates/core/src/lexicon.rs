//! Built-in word lists: demographic dimensions, judgmental modifiers and the
//! default human-noun lexicon.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A protected-attribute category and its two representative demographics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicDimension {
    pub name: String,
    pub demographics: [String; 2],
}

impl DemographicDimension {
    pub fn new(name: &str, first: &str, second: &str) -> Self {
        DemographicDimension {
            name: name.to_string(),
            demographics: [first.to_string(), second.to_string()],
        }
    }

    /// Name of the injected dimension column, e.g. `ethnicity`.
    pub fn column_name(&self) -> String {
        self.name.to_lowercase()
    }

    /// Name of the indicator column for one demographic, e.g. `is_white`.
    pub fn indicator_name(&self, which: usize) -> String {
        format!("is_{}", self.demographics[which].to_lowercase())
    }

    /// Every column name this dimension can inject, in injection order.
    pub fn column_names(&self) -> [String; 3] {
        [self.column_name(), self.indicator_name(0), self.indicator_name(1)]
    }
}

pub fn default_dimensions() -> Vec<DemographicDimension> {
    vec![
        DemographicDimension::new("Ethnicity", "White", "Black"),
        DemographicDimension::new("Religion", "Muslim", "Jewish"),
        DemographicDimension::new("Gender", "Female", "Male"),
        DemographicDimension::new("Sexuality", "Homosexual", "Gay"),
        DemographicDimension::new("Disability", "Blind", "Deaf"),
        DemographicDimension::new("Age", "Old", "Young"),
        DemographicDimension::new("Politics", "Democrat", "Republican"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModifierCategory {
    RobertaNeg,
    RandomNeg,
    RandomPos,
    Comparative,
}

impl ModifierCategory {
    pub const ALL: [ModifierCategory; 4] = [
        ModifierCategory::RobertaNeg,
        ModifierCategory::RandomNeg,
        ModifierCategory::RandomPos,
        ModifierCategory::Comparative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModifierCategory::RobertaNeg => "roberta_neg",
            ModifierCategory::RandomNeg => "random_neg",
            ModifierCategory::RandomPos => "random_pos",
            ModifierCategory::Comparative => "comparative",
        }
    }

    /// Label used in rendered report tables.
    pub fn title(self) -> &'static str {
        match self {
            ModifierCategory::RobertaNeg => "RoBERTa-Neg",
            ModifierCategory::RandomNeg => "Random-Neg",
            ModifierCategory::RandomPos => "Random-Pos",
            ModifierCategory::Comparative => "Comparative",
        }
    }
}

impl fmt::Display for ModifierCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModifierCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        ModifierCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == norm)
            .ok_or_else(|| Error::Config(format!("unknown modifier category `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifierSet {
    pub category: ModifierCategory,
    pub words: Vec<String>,
}

const ROBERTA_NEG: [&str; 25] = [
    "lonely", "depressed", "jealous", "lazy", "tired", "sick", "poor", "fat", "upset", "angry",
    "disgusting", "filthy", "nasty", "rotten", "horrible", "terrible", "awful", "repulsive", "vile",
    "idiotic", "stupid", "moronic", "dumb", "ugly", "shitty",
];

const RANDOM_NEG: [&str; 10] = [
    "dark", "mawkish", "aground", "contemptuous", "erroneous", "superficial", "ironical",
    "imaginary", "inept", "freakish",
];

const RANDOM_POS: [&str; 10] = [
    "propitious", "sporty", "fascinating", "heartfelt", "dauntless", "extraordinary", "confident",
    "stylish", "snappy", "superb",
];

const COMPARATIVE: [&str; 4] = ["better", "worse", "best", "worst"];

impl ModifierSet {
    pub fn default_for(category: ModifierCategory) -> Self {
        let words: &[&str] = match category {
            ModifierCategory::RobertaNeg => &ROBERTA_NEG,
            ModifierCategory::RandomNeg => &RANDOM_NEG,
            ModifierCategory::RandomPos => &RANDOM_POS,
            ModifierCategory::Comparative => &COMPARATIVE,
        };
        ModifierSet {
            category,
            words: words.iter().map(|w| w.to_string()).collect(),
        }
    }
}

pub fn default_modifier_sets() -> Vec<ModifierSet> {
    ModifierCategory::ALL
        .into_iter()
        .map(ModifierSet::default_for)
        .collect()
}

/// Singular head nouns denoting people. Irregular plurals are listed
/// explicitly; regular plurals are matched by the plural-s rule.
pub const DEFAULT_HUMAN_TERMS: &[&str] = &[
    // generic
    "person", "people", "persons", "human", "individual", "man", "men", "woman", "women",
    "child", "children", "kid", "adult", "baby", "boy", "girl", "gentleman", "lady", "ladies",
    "citizen", "resident", "inhabitant", "immigrant",
    // kinship and social
    "parent", "mother", "father", "son", "daughter", "brother", "sister", "sibling", "husband",
    "wife", "wives", "spouse", "family", "families", "relative", "friend", "grandparent",
    "dependent", "dependents",
    // education
    "student", "pupil", "teacher", "professor", "instructor", "faculty", "lecturer", "tutor",
    "advisor", "adviser", "graduate", "alumnus", "alumni", "scholar", "researcher", "scientist",
    // work
    "employee", "employer", "staff", "worker", "manager", "director", "head", "boss", "chief",
    "ceo", "president", "chairman", "member", "clerk", "secretary", "assistant", "engineer",
    "architect", "technician", "mechanic", "accountant", "consultant", "contractor", "agent",
    "representative", "officer", "official", "supervisor", "volunteer", "intern",
    "trainee", "colleague", "owner", "founder", "entrepreneur", "investor", "shareholder",
    "partner", "operator", "inspector", "analyst", "developer", "programmer", "designer",
    "editor", "author", "writer", "journalist", "reporter", "publisher", "photographer",
    "lawyer", "judge", "attorney", "police", "policeman", "detective", "firefighter",
    "soldier", "captain", "commander", "sailor", "pilot", "astronaut", "driver",
    "conductor", "farmer", "fisherman", "chef", "cook", "waiter", "waitress", "cashier",
    "salesman", "salesperson", "seller", "buyer", "dealer", "vendor", "broker", "banker",
    "librarian", "nurse", "doctor", "physician", "surgeon", "dentist", "pharmacist",
    "physician", "therapist", "patient", "caretaker", "staffer", "host", "hostess",
    // customers and services
    "customer", "client", "user", "visitor", "guest", "passenger", "tourist", "traveler",
    "traveller", "shopper", "subscriber", "tenant", "landlord", "borrower", "lender",
    "applicant", "candidate", "voter", "donor", "sponsor", "follower", "fan", "audience",
    "attendee", "participant", "contestant", "competitor", "winner", "loser", "nominee",
    "recipient", "beneficiary", "victim", "perpetrator", "criminal", "suspect", "witness",
    "prisoner", "inmate", "enemy", "ally", "mountaineer", "climber", "hiker", "member",
    // arts, sports and politics
    "singer", "musician", "artist", "actor", "actress", "dancer", "performer", "composer",
    "songwriter", "poet", "painter", "sculptor", "director", "producer", "celebrity",
    "player", "athlete", "gymnast", "wrestler", "swimmer", "runner", "boxer", "coach",
    "referee", "umpire", "manager", "captain", "jockey", "rider", "cyclist", "golfer",
    "politician", "senator", "governor", "mayor", "minister", "king", "queen", "monarch",
    "ruler", "leader", "delegate", "congressman", "legislator", "ambassador", "diplomat",
    "journalist", "host", "presenter", "teammate", "champion", "hero", "heroes",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_default_dimensions() {
        let dims = default_dimensions();
        assert_eq!(dims.len(), 7);
        let names: Vec<&str> = dims.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(
            names,
            ["Ethnicity", "Religion", "Gender", "Sexuality", "Disability", "Age", "Politics"]
        );
        assert_eq!(dims[3].demographics, ["Homosexual".to_string(), "Gay".to_string()]);
        assert_eq!(dims[3].indicator_name(0), "is_homosexual");
        assert_eq!(dims[0].column_names(), ["ethnicity", "is_white", "is_black"].map(String::from));
    }

    #[test]
    fn modifier_set_sizes() {
        let sizes: Vec<usize> = default_modifier_sets().iter().map(|s| s.words.len()).collect();
        assert_eq!(sizes, [25, 10, 10, 4]);
        let roberta = ModifierSet::default_for(ModifierCategory::RobertaNeg);
        assert!(roberta.words.iter().any(|w| w == "dumb"));
        let comparative = ModifierSet::default_for(ModifierCategory::Comparative);
        assert_eq!(comparative.words, ["better", "worse", "best", "worst"]);
    }

    #[test]
    fn category_parsing() {
        assert_eq!("roberta-neg".parse::<ModifierCategory>().unwrap(), ModifierCategory::RobertaNeg);
        assert_eq!("Comparative".parse::<ModifierCategory>().unwrap(), ModifierCategory::Comparative);
        assert!("neutral".parse::<ModifierCategory>().is_err());
    }
}
