use proptest::prelude::*;

use simpilot_core::entity::{EntityClass, EntityParser, TaggedUtterance};
use simpilot_core::metrics::{align, wer, Counts, Prf1};
use simpilot_core::phraseology::{
    alphabet_words, digit_words, icao_from_spoken, normalize, shortened_variants, verbalize_callsign,
    AirlineDesignatorTable, IcaoCallsign, VerbalizeMode, MIN_SHORTENED_WORDS,
};
use simpilot_core::resolver::{weighted_levenshtein, CallsignResolver, EditCosts, SurveillanceSnapshot};
use simpilot_core::response::{apply_word_fixer, convert_grammar, render_readback, Rhs, WordFixerRules};

const VOCAB: [&str; 5] = ["one", "two", "alfa", "bravo", "hansa"];

fn seq() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(&VOCAB[..]), 0..8)
}

fn callsign() -> impl Strategy<Value = IcaoCallsign> {
    const CODES: [&str; 7] = ["RYR", "DLH", "AUA", "BAW", "EZY", "SWR", "WZZ"];
    (prop::sample::select(&CODES[..]), "[1-9][0-9A-Z]{1,3}")
        .prop_map(|(code, rest)| IcaoCallsign::new(&format!("{code}{rest}")).unwrap())
}

fn atc_text() -> impl Strategy<Value = String> {
    const PIECES: [&str; 32] = [
        "ryanair", "hansa", "austrian", "nine", "two", "six", "bravo", "lima", "yankee", "papa", "turn", "left",
        "right", "heading", "descend", "climb", "flight", "level", "reduce", "speed", "knots", "contact", "tower",
        "decimal", "squawk", "maintain", "altitude", "good", "morning", "zero", "one", "three",
    ];
    prop::collection::vec(prop::sample::select(&PIECES[..]), 0..14).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_a_metric(a in seq(), b in seq(), c in seq()) {
        let costs = EditCosts::<u32>::unit();
        let d = |x: &[&str], y: &[&str]| weighted_levenshtein(x, y, &costs);
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert!(d(&a, &b) as usize >= a.len().abs_diff(b.len()));
        prop_assert!(d(&a, &b) as usize <= a.len().max(b.len()));
    }

    #[test]
    fn scaled_costs_scale_distance(a in seq(), b in seq(), w in 1u32..5) {
        let unit = weighted_levenshtein(&a, &b, &EditCosts::<u32>::unit());
        prop_assert_eq!(weighted_levenshtein(&a, &b, &EditCosts::uniform(w)), unit * w);
        let f = weighted_levenshtein(&a, &b, &EditCosts::<f64>::unit());
        prop_assert_eq!(f, unit as f64);
    }

    #[test]
    fn align_matches_distance(a in seq(), b in seq()) {
        let counts = align(&a, &b);
        prop_assert_eq!(counts.errors() as u32, weighted_levenshtein(&a, &b, &EditCosts::<u32>::unit()));
        prop_assert_eq!(counts.correct + counts.substitutions + counts.deletions, a.len());
        if !a.is_empty() {
            prop_assert_eq!(wer(&align(&a, &a)).unwrap(), 0.0);
            prop_assert!(wer(&counts).unwrap() >= 0.0);
        }
    }

    #[test]
    fn normalize_is_idempotent(text in "[ -~]{0,60}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once.render()), once.clone());
        prop_assert!(once.words().iter().all(|w| !w.is_empty() && w.chars().all(|c| !c.is_ascii_uppercase())));
    }

    #[test]
    fn verbalization_round_trips(cs in callsign()) {
        let table = AirlineDesignatorTable::builtin();
        let spoken = verbalize_callsign(&cs, &table, VerbalizeMode::Strict).unwrap();
        prop_assert!(spoken.is_in_vocabulary(&table));
        prop_assert_eq!(icao_from_spoken(spoken.words(), &table), Some(cs));
    }

    #[test]
    fn verbalization_is_injective(a in callsign(), b in callsign()) {
        let table = AirlineDesignatorTable::builtin();
        let sa = verbalize_callsign(&a, &table, VerbalizeMode::Strict).unwrap();
        let sb = verbalize_callsign(&b, &table, VerbalizeMode::Strict).unwrap();
        prop_assert_eq!(a == b, sa == sb);
    }

    #[test]
    fn shortened_variants_are_distinct_suffixes(cs in callsign()) {
        let table = AirlineDesignatorTable::builtin();
        let full = verbalize_callsign(&cs, &table, VerbalizeMode::Strict).unwrap();
        let variants = shortened_variants(&full);
        prop_assert_eq!(&variants[0], &full);
        for (i, v) in variants.iter().enumerate() {
            prop_assert!(full.words().ends_with(v.words()));
            if i > 0 {
                prop_assert!(v.len() >= MIN_SHORTENED_WORDS);
            }
            prop_assert!(!variants[..i].contains(v));
        }
    }

    #[test]
    fn rerank_zero_cost_iff_variant_spoken(
        pool in prop::collection::btree_set(callsign(), 1..12),
        pick in any::<prop::sample::Index>(),
        variant in any::<prop::sample::Index>(),
    ) {
        let table = AirlineDesignatorTable::builtin();
        let callsigns: Vec<IcaoCallsign> = pool.into_iter().collect();
        let snapshot = SurveillanceSnapshot::new(0, callsigns.clone()).unwrap();
        let resolver = CallsignResolver::new(&snapshot, &table, EditCosts::<f64>::unit()).unwrap();
        let target = pick.get(&callsigns);
        let variants = shortened_variants(&verbalize_callsign(target, &table, VerbalizeMode::Strict).unwrap());
        let spoken = variant.get(&variants);
        let ranked = resolver.rerank(spoken.words()).unwrap();
        prop_assert_eq!(ranked.len(), callsigns.len());
        prop_assert!(ranked.windows(2).all(|w| w[0].cost <= w[1].cost));
        prop_assert_eq!(ranked[0].cost, 0.0);
        for m in &ranked {
            let exact = shortened_variants(&verbalize_callsign(&m.candidate, &table, VerbalizeMode::Strict).unwrap())
                .iter()
                .any(|v| v == spoken);
            prop_assert_eq!(m.cost == 0.0, exact);
            prop_assert!((0.0..=1.0).contains(&m.normalized_cost));
        }
    }

    #[test]
    fn f1_is_harmonic_mean(tp in 1usize..1000, fp in 0usize..1000, fn_ in 0usize..1000) {
        let m = Prf1::from_counts(Counts { tp, fp, fn_ });
        let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        prop_assert!((m.f1 - h).abs() <= 1e-12);
        prop_assert!(!m.undefined);
    }

    #[test]
    fn parse_spans_are_ordered_and_disjoint(text in atc_text()) {
        let parsed = EntityParser::builtin().parse_text(&text).unwrap();
        let spans = parsed.spans();
        prop_assert!(spans.windows(2).all(|w| w[0].end <= w[1].start));
        prop_assert!(spans.iter().all(|s| s.start < s.end && s.end <= parsed.utterance.len()));
        prop_assert_eq!(parsed.no_callsign, parsed.callsign.is_none());
        prop_assert!(spans.iter().filter(|s| s.cls == EntityClass::Callsign).count() <= 1);
    }

    #[test]
    fn tagged_render_round_trips(text in atc_text()) {
        let parsed = EntityParser::builtin().parse_text(&text).unwrap();
        let rendered = parsed.render_tagged();
        let again = normalize(&rendered);
        prop_assert_eq!(again.words(), parsed.utterance.words());
        if !parsed.utterance.is_empty() {
            let back = TaggedUtterance::parse(&rendered).unwrap();
            prop_assert_eq!(back.spans, parsed.spans());
        }
    }

    #[test]
    fn word_fixer_keeps_callsign_and_values(text in atc_text()) {
        let rules = WordFixerRules::builtin();
        let parsed = EntityParser::builtin().parse_text(&text).unwrap();
        let plan = convert_grammar(&parsed);
        let fixed = apply_word_fixer(&plan, &rules);
        prop_assert_eq!(&fixed.plan.callsign_words, &plan.callsign_words);
        let dropping = fixed.applied.iter().any(|a| rules.rules[a.rule].rhs == Rhs::Drop);
        if !dropping {
            let before: Vec<&String> = plan.elements.iter().flat_map(|e| &e.values).collect();
            let after: Vec<&String> = fixed.plan.elements.iter().flat_map(|e| &e.values).collect();
            prop_assert_eq!(before, after);
        }
        let out = render_readback(&fixed.plan);
        prop_assert!(out.ends_with(&plan.callsign_words.join(" ")));
    }
}

#[test]
fn spelled_words_cover_icao_alphabet() {
    assert_eq!(digit_words().len(), 10);
    assert_eq!(alphabet_words().len(), 26);
}
