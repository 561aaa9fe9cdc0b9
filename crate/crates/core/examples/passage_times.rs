//! Sample an exponential weight field, compute T and T', and round-trip it
//! through the binary layout.

use uptail::lpp::{last_passage, passage_through, WeightField};

fn main() -> uptail::Result<()> {
    let field = WeightField::sample(30, 20, 42)?;
    let s = last_passage(&field, (1, 1), (30, 20))?;
    println!(
        "T = {:.4}, T' = {:.4}, T/(sqrt(30)+sqrt(20))^2 = {:.4}",
        s.value,
        s.truncated_value,
        s.value / (30f64.sqrt() + 20f64.sqrt()).powi(2)
    );

    // best path forced through (15, 10)
    println!("through (15,10): {:.4}", passage_through(&field, (15, 10))?);

    let mut buf = Vec::new();
    field.write_binary(&mut buf)?;
    let back = WeightField::read_binary(buf.as_slice())?;
    assert_eq!(back.weights(), field.weights());
    println!("binary layout: {} bytes, seed {:?}", buf.len(), back.seed());
    Ok(())
}
