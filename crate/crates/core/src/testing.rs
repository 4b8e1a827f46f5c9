//! The bands-and-songs example shared by unit tests.

use crate::exec::Exec;
use crate::model::{Constant, Database};
use crate::sim::{sim_all, Scorer, SimFunc, SimStore, SimTable};
use crate::spec::{parse_spec, Specification};

pub(crate) const SPEC: &str = include_str!("../tests/data/running/music.er");
const TABLE: &str = include_str!("../tests/data/running/sim.tsv");

pub(crate) fn running_db() -> Database {
    let mut b = Database::builder();
    b.relation("Band", 5).unwrap();
    b.relation("Song", 4).unwrap();
    b.relation("Appear", 3).unwrap();
    let e = Constant::entity;
    let v = Constant::value;
    b.fact("Band", vec![e("b1"), v("Pink Floyd"), v("Psy. rock"), v("1965"), v("Barrett")])
        .unwrap();
    b.fact(
        "Band",
        vec![e("b2"), v("The Pink Floyd"), v("Prog. rock"), v("1965"), v("Barrett")],
    )
    .unwrap();
    for (s, t, band) in [
        ("s1", "Shine On You Crazy Diamond (I-IV)", "b1"),
        ("s2", "Shine On You Crazy Diamond", "b2"),
        ("s3", "Shine On You Crazy Diamond (V-IX)", "b1"),
    ] {
        b.fact("Song", vec![e(s), v(t), v("Waters"), e(band)]).unwrap();
    }
    for (s, a, p) in [
        ("s1", "Wish You Were Here", "1"),
        ("s2", "A Delicate Sound of Thunder", "1"),
        ("s3", "Wish You Were Here", "5"),
    ] {
        b.fact("Appear", vec![e(s), v(a), v(p)]).unwrap();
    }
    b.build()
}

/// Database, specification with every similarity atom backed by the fixed
/// table, and the table scored over all constants.
pub(crate) fn running_example() -> (Database, Specification, SimStore) {
    let db = running_db();
    let spec = parse_spec(SPEC).unwrap().with_sim_func(SimFunc::Table);
    let table = SimTable::read_tsv(TABLE.as_bytes()).unwrap();
    let scorer = Scorer::for_spec(&db, &spec).with_table(table);
    let sims = sim_all(&db, &spec, &scorer, Exec::Sequential);
    (db, spec, sims)
}
