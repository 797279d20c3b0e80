//! Eluder dimension of a few small function classes at several scales.

use stagewise::nonlinear::{eluder_dimension, FunctionClass};

fn main() -> stagewise::Result<()> {
    let classes = [
        (
            "constants",
            FunctionClass::new(vec![vec![0.0; 4], vec![0.5; 4], vec![1.0; 4]])?,
        ),
        (
            "indicators",
            FunctionClass::new(
                (0..4)
                    .map(|i| (0..4).map(|a| f64::from(u8::from(a == i))).collect())
                    .collect(),
            )?,
        ),
        (
            "linear in a",
            FunctionClass::new(
                (0..5)
                    .map(|k| (0..4).map(|a| k as f64 * a as f64 / 12.0).collect())
                    .collect(),
            )?,
        ),
    ];
    for (name, class) in &classes {
        let actions: Vec<usize> = (0..class.actions()).collect();
        let dims: Vec<usize> = [0.05, 0.3, 0.6]
            .iter()
            .map(|&e| eluder_dimension(class, &actions, e))
            .collect::<Result<_, _>>()?;
        println!("{name:>12}: eps 0.05/0.3/0.6 -> {dims:?}");
    }
    Ok(())
}
