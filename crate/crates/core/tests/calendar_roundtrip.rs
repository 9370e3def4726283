use std::collections::BTreeSet;
use std::io::BufReader;

use pacepath_core::calendar::{events_to_plan, export_ical, plan_to_events, PlanHeader};
use pacepath_testkit::gen::arb_plan;
use proptest::prelude::*;

type Triple = (String, String, String);

fn reparse(ics: &str) -> BTreeSet<Triple> {
    let mut out = BTreeSet::new();
    for cal in ical::IcalParser::new(BufReader::new(ics.as_bytes())) {
        for event in cal.expect("parses").events {
            let get = |name: &str| {
                event.properties.iter().find(|p| p.name == name).and_then(|p| p.value.clone()).unwrap_or_default()
            };
            out.insert((get("UID"), get("DTSTART"), get("DTEND")));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn plan_events_plan_preserves_sessions((plan, syllabus) in arb_plan()) {
        let events = plan_to_events(&plan, &syllabus).unwrap();
        prop_assert_eq!(events.len(), plan.sessions.len());
        let back = events_to_plan(&events, PlanHeader::of(&plan)).unwrap();
        let mut a = plan.sessions.clone();
        let mut b = back.sessions.clone();
        a.sort_by(|x, y| x.id.cmp(&y.id));
        b.sort_by(|x, y| x.id.cmp(&y.id));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ical_reparses_to_same_study_triples((plan, syllabus) in arb_plan()) {
        let events = plan_to_events(&plan, &syllabus).unwrap();
        let want: BTreeSet<Triple> = events
            .iter()
            .filter(|e| e.editable)
            .map(|e| (
                e.event_id.clone(),
                e.start.format("%Y%m%dT%H%M%S").to_string(),
                e.end.format("%Y%m%dT%H%M%S").to_string(),
            ))
            .collect();
        prop_assert_eq!(reparse(&export_ical(&events, "Plan")), want);
    }
}
