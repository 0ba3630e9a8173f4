use rulelab::experiment::coding::{keyword_code, map_free_text};
use rulelab::rule_space::{Domain, RuleTag};

fn main() {
    let truth = RuleTag::AllEven.into();
    for text in [
        "numbers go up by 2",
        "each number is bigger than the one before",
        "they are all even",
        "even and increasing",
        "no idea",
        "",
    ] {
        let mapped = map_free_text(text).map(|t| t.name());
        println!("{text:<45} {:<16} {:?}", mapped.unwrap_or("-"), keyword_code(text, &truth, Domain::monte_carlo()));
    }
}
