//! Published JSON Schemas (draft 2020-12) for the core document types.
//! Cross-references use relative `$id`s such as `profile.schema.json`.

macro_rules! schemas {
    ($($name:literal),* $(,)?) => {
        /// `(file name, schema text)` for every bundled schema.
        pub const ALL: &[(&str, &str)] = &[$(($name, include_str!(concat!("../schemas/", $name)))),*];
    };
}

schemas!(
    "answer.schema.json",
    "course_card.schema.json",
    "edits.schema.json",
    "events.schema.json",
    "learner_state.schema.json",
    "plan.schema.json",
    "plan_outline.schema.json",
    "profile.schema.json",
    "session_list.schema.json",
    "syllabus.schema.json",
);

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_schema_is_json_with_matching_id() {
        for (name, text) in super::ALL {
            let v: serde_json::Value = serde_json::from_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(v["$id"], *name);
        }
    }
}
