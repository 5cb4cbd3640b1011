//! One test per shipped word-fixer rule, applied on its own and through
//! the full table.

use simpilot_core::response::{apply_word_fixer, PlanElement, ReadbackPlan, WordFixerRules};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn plan(command: &str) -> ReadbackPlan {
    ReadbackPlan {
        elements: vec![PlanElement { command: words(command), values: words("two four zero") }],
        callsign_words: words("hansa six lima yankee"),
        rbe: None,
    }
}

fn expected(rhs: &str, keep_values: bool) -> Vec<PlanElement> {
    if rhs.is_empty() && !keep_values {
        return Vec::new();
    }
    let values = if keep_values { words("two four zero") } else { Vec::new() };
    vec![PlanElement { command: words(rhs), values }]
}

fn alone(index: usize) -> WordFixerRules {
    let mut rule = WordFixerRules::builtin().rules[index].clone();
    rule.shadowed = false;
    WordFixerRules { rules: vec![rule] }
}

macro_rules! rule_tests {
    ($($name:ident: $index:expr, $lhs:expr => $rhs:expr, keep = $keep:expr;)*) => {
        $(
            #[test]
            fn $name() {
                let table = WordFixerRules::builtin();
                assert_eq!(table.rules[$index].lhs, words($lhs));
                let out = apply_word_fixer(&plan($lhs), &alone($index));
                assert_eq!(out.plan.elements, expected($rhs, $keep));
                assert_eq!(out.plan.callsign_words, words("hansa six lima yankee"));
                assert_eq!(out.applied.len(), 1);
                assert_eq!(out.applied[0].rule, 0);
            }
        )*

        #[test]
        fn shipped_table_has_nineteen_rules() {
            let names: &[&str] = &[$(stringify!($name)),*];
            assert_eq!(names.len(), 19);
            assert_eq!(WordFixerRules::builtin().len(), 19);
        }
    };
}

rule_tests! {
    continue_heading: 0, "continue heading" => "continuing altitude", keep = true;
    heading: 1, "heading" => "heading", keep = true;
    turn: 2, "turn" => "heading", keep = true;
    turn_by: 3, "turn by" => "heading", keep = true;
    direct_to: 4, "direct to" => "proceeding direct", keep = true;
    contact_tower: 5, "contact tower" => "contact tower", keep = true;
    station_radar: 6, "station radar" => "station radar", keep = true;
    squawk: 7, "squawk" => "squawk", keep = true;
    squawking: 8, "squawking" => "squawk", keep = true;
    contact_frequency_drops: 9, "contact frequency" => "", keep = false;
    maintain_altitude: 10, "maintain altitude" => "maintaining altitude", keep = true;
    maintain_altitude_short: 11, "maintain altitude" => "maintain", keep = true;
    descend: 12, "descend" => "descending", keep = true;
    climb: 13, "climb" => "climbing", keep = true;
    altitude: 14, "altitude" => "steady", keep = true;
    reduce: 15, "reduce" => "reducing", keep = true;
    maintain_speed: 16, "maintain speed" => "maintaining", keep = true;
    reduce_speed: 17, "reduce speed" => "reduce speed", keep = true;
    speed_drops: 18, "speed" => "", keep = true;
}

#[test]
fn full_table_uses_first_of_duplicate_lhs() {
    let out = apply_word_fixer(&plan("maintain altitude"), &WordFixerRules::builtin());
    assert_eq!(out.plan.elements[0].command, words("maintaining altitude"));
    assert_eq!(out.applied[0].rule, 10);
}

#[test]
fn full_table_prefers_longest_lhs() {
    let table = WordFixerRules::builtin();
    let out = apply_word_fixer(&plan("reduce speed"), &table);
    assert_eq!(out.plan.elements[0].command, words("reduce speed"));
    let out = apply_word_fixer(&plan("turn by"), &table);
    assert_eq!(out.plan.elements[0].command, words("heading"));
}

#[test]
fn strict_load_rejects_the_duplicate() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/rules.txt");
    assert!(WordFixerRules::load(path).is_err());
}
