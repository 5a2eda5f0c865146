//! Small closed vocabularies shared by the file formats and the runtime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

closed_enum!(
    /// Relational stance gating whether a request is adopted.
    Attitude, "unknown attitude" {
        Servile => "SERVILE",
        Altruistic => "ALTRUISTIC",
        Cooperative => "COOPERATIVE",
        Rebellious => "REBELLIOUS",
        Uncooperative => "UNCOOPERATIVE",
    }
);

closed_enum!(
    Illocution, "unknown illocution" {
        Directive => "directive",
        Inform => "inform",
        WhyQuestion => "why-question",
        Answer => "answer",
    }
);

closed_enum!(
    Tone, "unknown tone" {
        Neutral => "neutral",
        Polite => "polite",
    }
);
