//! Read and write the plain-text formats used by the `seqmatch` binary and
//! run the CLI in-process.
//!
//! Run with `cargo run --example file_formats`.

use seqmatch::cli::{self, parse_distributions, parse_sequences, write_distributions};
use seqmatch::{Alphabet, Distribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dists = vec![Distribution::new(vec![0.1, 0.2, 0.7])?, Distribution::uniform(3)];
    let text = write_distributions(&dists);
    print!("distributions file:\n{text}");
    assert_eq!(parse_distributions(&text, "memory")?, dists);

    let seqs = parse_sequences("# two sequences\n0 2 2 1\n1 1 0 2\n", "memory", Alphabet::new(3)?)?;
    println!("parsed {} sequences of length {}", seqs.len(), seqs[0].len());

    if let Err(e) = parse_distributions("0.5 0.5\n0.5 oops\n", "broken.txt") {
        println!("diagnostic: {e}");
    }

    let dir = std::env::temp_dir().join("seqmatch-file-formats");
    std::fs::create_dir_all(&dir)?;
    let sources = dir.join("sources.txt");
    let sequences = dir.join("sequences.txt");
    std::fs::write(&sources, &text)?;
    std::fs::write(&sequences, "2 2 2 1 2 2 0 2\n0 1 2 0 2 1 1 0\n")?;

    let mut out = Vec::new();
    let code = cli::run(
        [
            "seqmatch",
            "match-known",
            "--sources",
            sources.to_str().unwrap(),
            "--sequences",
            sequences.to_str().unwrap(),
            "--k",
            "2",
            "--lambda",
            "0.01",
        ],
        &mut out,
        &mut std::io::stderr(),
    );
    print!("{}", String::from_utf8(out)?);
    println!("exit code {code}");
    Ok(())
}
