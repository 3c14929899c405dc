//! Map a benchmark-style claim file onto claim records.
//!
//! cargo run --example load_dataset

use zefav::datasets::{load_split, DatasetSource, FieldMapping};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("dev.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"id": 1, "claim": "Ajax won in 1995.", "label": "SUPPORTS", "challenge": "Combining Tables and Text", "#,
            r#""evidence": [[["Year", "Winner"], ["1995", "Ajax"]], "Ajax is a Dutch club."]}"#,
            "\n",
            r#"{"id": 2, "claim": "Mercury has two moons.", "label": "REFUTES", "challenge": "Other", "#,
            r#""evidence": [{"text": "Mercury has no natural satellites."}]}"#,
            "\n"
        ),
    )?;

    for r in load_split(&path, &FieldMapping::feverous(), DatasetSource::FeverousS)? {
        println!("{} [{}] gold={:?}: {}", r.id, r.stratum.as_deref().unwrap_or("-"), r.gold, r.claim);
        for e in &r.evidence {
            println!("    {}", e.replace('\n', "\n    "));
        }
    }

    // Unknown labels are reported for every offending record at once.
    std::fs::write(&path, "{\"id\": 3, \"claim\": \"x\", \"label\": \"NOT ENOUGH INFO\", \"evidence\": []}\n")?;
    if let Err(e) = load_split(&path, &FieldMapping::feverous(), DatasetSource::FeverousS) {
        println!("error: {e}");
    }
    Ok(())
}
