use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Ship type vocabulary broadcast in AIS static messages, plus a catch-all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShipType {
    AntiPollution,
    Cargo,
    Dredging,
    Fishing,
    Hsc,
    Pilot,
    PortTender,
    Military,
    Passenger,
    LawEnforcement,
    Pleasure,
    Medical,
    Reserved,
    Sailing,
    Sar,
    Tanker,
    Towing,
    Tug,
    Unknown,
}

impl ShipType {
    pub const KNOWN: [ShipType; 18] = [
        ShipType::AntiPollution,
        ShipType::Cargo,
        ShipType::Dredging,
        ShipType::Fishing,
        ShipType::Hsc,
        ShipType::Pilot,
        ShipType::PortTender,
        ShipType::Military,
        ShipType::Passenger,
        ShipType::LawEnforcement,
        ShipType::Pleasure,
        ShipType::Medical,
        ShipType::Reserved,
        ShipType::Sailing,
        ShipType::Sar,
        ShipType::Tanker,
        ShipType::Towing,
        ShipType::Tug,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShipType::AntiPollution => "Anti-pollution",
            ShipType::Cargo => "Cargo",
            ShipType::Dredging => "Dredging",
            ShipType::Fishing => "Fishing",
            ShipType::Hsc => "HSC",
            ShipType::Pilot => "Pilot",
            ShipType::PortTender => "Port tender",
            ShipType::Military => "Military",
            ShipType::Passenger => "Passenger",
            ShipType::LawEnforcement => "Law enforcement",
            ShipType::Pleasure => "Pleasure",
            ShipType::Medical => "Medical",
            ShipType::Reserved => "Reserved",
            ShipType::Sailing => "Sailing",
            ShipType::Sar => "SAR",
            ShipType::Tanker => "Tanker",
            ShipType::Towing => "Towing",
            ShipType::Tug => "Tug",
            ShipType::Unknown => "Unknown",
        }
    }

    /// Parses a provider label. Labels outside the vocabulary map to `Unknown`.
    pub fn from_label(label: &str) -> ShipType {
        let key = normalize(label);
        ShipType::KNOWN
            .iter()
            .copied()
            .find(|t| normalize(t.name()) == key)
            .unwrap_or(match key.as_str() {
                // DMA exports spell this one out
                "towinglongwide" => ShipType::Towing,
                _ => ShipType::Unknown,
            })
    }
}

impl fmt::Display for ShipType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Binary target of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Fishing,
    NonFishing,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fishing => "fishing",
            Label::NonFishing => "non_fishing",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Fishing => Label::NonFishing,
            Label::NonFishing => Label::Fishing,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fishing" => Ok(Label::Fishing),
            "non_fishing" => Ok(Label::NonFishing),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryClass {
    Fishing,
    NonFishing,
    Unlabeled,
}

impl BinaryClass {
    pub fn label(self) -> Option<Label> {
        match self {
            BinaryClass::Fishing => Some(Label::Fishing),
            BinaryClass::NonFishing => Some(Label::NonFishing),
            BinaryClass::Unlabeled => None,
        }
    }
}

pub fn to_binary_class(ship_type: Option<ShipType>) -> BinaryClass {
    match ship_type {
        Some(ShipType::Fishing) => BinaryClass::Fishing,
        Some(ShipType::Unknown) | None => BinaryClass::Unlabeled,
        Some(_) => BinaryClass::NonFishing,
    }
}

/// AIS navigational status (message 1-3 field), used as the vessel's reported maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavStatus {
    UnderWayUsingEngine,
    AtAnchor,
    NotUnderCommand,
    RestrictedManeuverability,
    ConstrainedByDraught,
    Moored,
    Aground,
    EngagedInFishing,
    UnderWaySailing,
    ReservedHsc,
    ReservedWig,
    TowingAstern,
    PushingAhead,
    ReservedFuture,
    AisSart,
    Undefined,
}

impl NavStatus {
    const ALL: [NavStatus; 16] = [
        NavStatus::UnderWayUsingEngine,
        NavStatus::AtAnchor,
        NavStatus::NotUnderCommand,
        NavStatus::RestrictedManeuverability,
        NavStatus::ConstrainedByDraught,
        NavStatus::Moored,
        NavStatus::Aground,
        NavStatus::EngagedInFishing,
        NavStatus::UnderWaySailing,
        NavStatus::ReservedHsc,
        NavStatus::ReservedWig,
        NavStatus::TowingAstern,
        NavStatus::PushingAhead,
        NavStatus::ReservedFuture,
        NavStatus::AisSart,
        NavStatus::Undefined,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<NavStatus> {
        NavStatus::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            NavStatus::UnderWayUsingEngine => "Under way using engine",
            NavStatus::AtAnchor => "At anchor",
            NavStatus::NotUnderCommand => "Not under command",
            NavStatus::RestrictedManeuverability => "Restricted maneuverability",
            NavStatus::ConstrainedByDraught => "Constrained by her draught",
            NavStatus::Moored => "Moored",
            NavStatus::Aground => "Aground",
            NavStatus::EngagedInFishing => "Engaged in fishing",
            NavStatus::UnderWaySailing => "Under way sailing",
            NavStatus::ReservedHsc => "Reserved for future amendment [HSC]",
            NavStatus::ReservedWig => "Reserved for future amendment [WIG]",
            NavStatus::TowingAstern => "Power-driven vessel towing astern",
            NavStatus::PushingAhead => "Power-driven vessel pushing ahead or towing alongside",
            NavStatus::ReservedFuture => "Reserved for future use",
            NavStatus::AisSart => "AIS-SART",
            NavStatus::Undefined => "Unknown value",
        }
    }

    /// Moored or at anchor: the vessel claims it is not moving.
    pub fn is_stationary(self) -> bool {
        matches!(self, NavStatus::Moored | NavStatus::AtAnchor)
    }
}

impl FromStr for NavStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(code) = s.parse::<u8>() {
            return NavStatus::from_code(code).ok_or_else(|| format!("navigational status code {code} out of range"));
        }
        let key = normalize(s);
        if let Some(status) = NavStatus::ALL.iter().copied().find(|n| normalize(n.name()) == key) {
            return Ok(status);
        }
        match key.as_str() {
            "restrictedmanoeuverability" | "restrictedmanoeuvrability" => Ok(NavStatus::RestrictedManeuverability),
            "undefined" | "unknown" | "notdefined" => Ok(NavStatus::Undefined),
            _ => Err(format!("unknown navigational status `{s}`")),
        }
    }
}

impl fmt::Display for NavStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobileClass {
    Ship,
    BaseStation,
    Other,
}

impl MobileClass {
    pub fn from_label(label: &str) -> MobileClass {
        match normalize(label).as_str() {
            "ship" | "classa" | "classb" => MobileClass::Ship,
            "basestation" => MobileClass::BaseStation,
            _ => MobileClass::Other,
        }
    }

    /// MMSIs of the form 00MIDxxxx are coast/base stations.
    pub fn from_mmsi(mmsi: u32) -> MobileClass {
        if mmsi < 10_000_000 {
            MobileClass::BaseStation
        } else {
            MobileClass::Ship
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MobileClass::Ship => "ship",
            MobileClass::BaseStation => "base-station",
            MobileClass::Other => "other",
        }
    }
}

/// One timestamped AIS contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub mmsi: u32,
    pub lat: f64,
    pub lon: f64,
    /// Knots.
    pub sog: Option<f64>,
    /// Degrees clockwise from north.
    pub cog: Option<f64>,
    pub nav_status: Option<NavStatus>,
    pub ship_type: Option<ShipType>,
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub mobile_class: MobileClass,
}

fn normalize(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}
