//! Detecting causal order from observed statistics.

use causalkit::causal::behavior::{
    chsh_value, identity_channel_behavior, signalling_graph, tsirelson_behavior, two_way_behavior, Behavior,
};
use causalkit::causal::detect::{biorder_of, detect_causal_order, ic_behavior, is_causally_ordered};
use causalkit::causal::order::PartialOrder;
use causalkit::process::{random_causal_process, Lab};

fn show(name: &str, b: &Behavior) -> causalkit::Result<()> {
    let v = detect_causal_order(b, b.labs(), 1e-9)?;
    let compatible: Vec<String> = v.compatible_orders.iter().map(|o| o.to_string()).collect();
    print!("{name:>10}: signalling {}, exhibits order {}, compatible [{}]", signalling_graph(b, 1e-9), v.exhibits, compatible.join(", "));
    if v.exhibits {
        print!(", bi-order {}", biorder_of(&v)?);
    }
    println!();
    Ok(())
}

fn main() -> causalkit::Result<()> {
    show("identity", &identity_channel_behavior())?;
    show("tsirelson", &tsirelson_behavior())?;
    show("two-way", &two_way_behavior())?;
    println!("CHSH value of the Tsirelson behavior: {:.6}", chsh_value(&tsirelson_behavior())?);

    let labs = vec![Lab::qubit("A"), Lab::qubit("B"), Lab::qubit("C")];
    let order = PartialOrder::new(vec!["A".into(), "B".into(), "C".into()], &[("A", "B"), ("A", "C")])?;
    let p = random_causal_process(11, &order, &labs)?;
    let b = ic_behavior(&p)?;
    println!("random process for {order}: signalling {}", signalling_graph(&b, 1e-7));
    println!("  causally ordered: {:?}", is_causally_ordered(&p, 1e-7)?.map(|o| o.to_string()));
    let v = detect_causal_order(&b, &["B".into(), "C".into()], 1e-7)?;
    println!("  order on {{B, C}} given the rest: exhibits {}", v.exhibits);
    Ok(())
}
