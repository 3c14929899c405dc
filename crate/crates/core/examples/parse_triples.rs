//! Parse relation-extraction output into triples.
//!
//! cargo run --example parse_triples

use zefav::relation::{parse_triples_with_policy, CatalogPolicy, Origin, RelationCatalog};

fn main() {
    let catalog = RelationCatalog::builtin();
    let generation = r#"(Gustave Eiffel, place of birth, Dijon), (Eiffel Tower, architect, Gustave Eiffel)
(Nokia, headquarters location, "Espoo, Finland") (Dijon, country, France) (dangling, open"#;

    for policy in [CatalogPolicy::Flag, CatalogPolicy::Enforce] {
        let parsed = parse_triples_with_policy(generation, Origin::Evidence, &catalog, policy);
        println!("{policy:?}:");
        for t in &parsed.triples {
            let note = if t.in_catalog() { "" } else { "  (not in catalog)" };
            println!("  {t}{note}");
        }
        for w in &parsed.warnings {
            println!("  warning: {w}");
        }
    }
}
