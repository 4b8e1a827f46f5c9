//! Random sim-safe instances: up to three keyed relations, optional
//! references between them, hard and soft rules over names, categories and
//! references, and denial constraints on categories or references.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write;

use er_core::sim::{sim_all, Scorer};
use er_core::{parse_spec, Constant, Database, Exec, SimStore, Specification};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

const NAMES: [&str; 6] = ["anna", "anne", "ana", "bob", "bobby", "rob"];
const CATEGORIES: [&str; 3] = ["v0", "v1", "v2"];
const THRESHOLDS: [u32; 3] = [70, 75, 80];

pub struct Instance {
    pub seed: u64,
    pub text: String,
    pub spec: Specification,
    pub db: Database,
    pub sims: SimStore,
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_entities: usize,
    pub max_relations: usize,
    pub max_rules: usize,
    pub max_dcs: usize,
    pub max_rows: usize,
    pub nulls: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_entities: 20,
            max_relations: 3,
            max_rules: 4,
            max_dcs: 2,
            max_rows: 7,
            nulls: true,
        }
    }
}

impl Shape {
    pub fn hard_only(self) -> Self {
        Shape { max_dcs: 0, ..self }
    }
}

struct Rel {
    name: String,
    /// Index of the relation referenced by the `r` column.
    target: Option<usize>,
    keys: Vec<String>,
}

impl Rel {
    /// `R(k, [r,] a, n)` with the given terms, `_` where `None`.
    fn atom(&self, k: &str, r: Option<&str>, a: Option<&str>, n: Option<&str>) -> String {
        let mut terms = vec![k.to_string()];
        if self.target.is_some() {
            terms.push(r.unwrap_or("_").to_string());
        }
        terms.push(a.unwrap_or("_").to_string());
        terms.push(n.unwrap_or("_").to_string());
        format!("{}({})", self.name, terms.join(", "))
    }
}

fn pick<'a>(rng: &mut StdRng, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

pub fn generate(seed: u64, shape: Shape) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let nrel = rng.random_range(1..=shape.max_relations).max(rng.random_range(1..=shape.max_relations));
    let mut rels: Vec<Rel> = Vec::new();
    let mut entities = 0;
    let mut text = String::new();
    let mut rows: Vec<(String, Vec<Constant>)> = Vec::new();
    for i in 0..nrel {
        let target = (i > 0 && rng.random_bool(0.7)).then(|| rng.random_range(0..i));
        let budget = shape.max_entities.saturating_sub(entities).min(shape.max_rows);
        if budget < 3 {
            break;
        }
        let nrows = rng.random_range(3..=budget);
        let name = format!("R{i}");
        let _ = write!(text, "relation {name}(k:id, ");
        if target.is_some() {
            text.push_str("r:id, ");
        }
        text.push_str("a:val, n:short) merge [k");
        if target.is_some() {
            text.push_str(", r");
        }
        text.push_str("];\n");
        let mut keys: Vec<String> = Vec::new();
        for m in 0..nrows {
            let key = if m > 0 && rng.random_bool(0.1) {
                keys[rng.random_range(0..keys.len())].clone()
            } else {
                let k = format!("{}e{m}", name.to_lowercase());
                keys.push(k.clone());
                k
            };
            let null = |rng: &mut StdRng, p: f64| shape.nulls && rng.random_bool(p);
            let mut args = vec![Constant::entity(key.as_str())];
            if let Some(t) = target {
                let tk: &Rel = &rels[t];
                if null(&mut rng, 0.1) {
                    args.push(Constant::null());
                } else {
                    let refs: Vec<&str> = tk.keys.iter().map(String::as_str).collect();
                    args.push(Constant::entity(pick(&mut rng, &refs)));
                }
            }
            args.push(if null(&mut rng, 0.1) {
                Constant::null()
            } else {
                Constant::value(pick(&mut rng, &CATEGORIES))
            });
            args.push(if null(&mut rng, 0.05) {
                Constant::null()
            } else {
                Constant::value(pick(&mut rng, &NAMES))
            });
            rows.push((name.clone(), args));
        }
        entities += keys.len();
        rels.push(Rel { name, target, keys });
    }

    let nrules = rng.random_range(1..=shape.max_rules);
    let mut soft_on: Vec<usize> = Vec::new();
    for j in 0..nrules {
        let ri = rng.random_range(0..rels.len());
        let r = &rels[ri];
        let kind = if rng.random_bool(0.3) { "hard" } else { "soft" };
        if kind == "soft" {
            soft_on.push(ri);
        }
        let arrow = if kind == "hard" { "=>" } else { "~>" };
        let sim = format!(
            "sim:jw(n1, n2) >= {}",
            THRESHOLDS[rng.random_range(0..THRESHOLDS.len())]
        );
        let referrers: Vec<usize> = (0..rels.len()).filter(|&i| rels[i].target == Some(ri)).collect();
        let body = if r.target.is_some() && rng.random_bool(0.25) {
            // merge the referenced entities of two similar rows
            let same_a = rng.random_bool(0.5);
            let (a1, a2) = if same_a { ("a", "a") } else { ("_", "_") };
            let head = "eq(r1, r2)";
            format!(
                "{}, {}, {sim} {arrow} {head}",
                r.atom("x", Some("r1"), Some(a1), Some("n1")),
                r.atom("y", Some("r2"), Some(a2), Some("n2")),
            )
        } else if !referrers.is_empty() && rng.random_bool(0.35) {
            // entities referenced by the same (or merged) referrer row
            let s = &rels[referrers[rng.random_range(0..referrers.len())]];
            let with_sim = rng.random_bool(0.6);
            let (n1, n2) = if with_sim { ("n1", "n2") } else { ("_", "_") };
            let mut atoms = vec![
                r.atom("x", None, None, Some(n1)),
                r.atom("y", None, None, Some(n2)),
                s.atom("z", Some("x"), Some("c"), None),
                s.atom("z", Some("y"), None, None),
            ];
            if with_sim {
                atoms.push(sim.clone());
            } else {
                atoms[1] = r.atom("y", None, Some("b"), None);
                atoms[0] = r.atom("x", None, Some("b"), None);
            }
            format!("{} {arrow} eq(x, y)", atoms.join(", "))
        } else {
            let mut same_a = rng.random_bool(0.2);
            let same_r = r.target.is_some() && rng.random_bool(0.6);
            let use_sim = rng.random_bool(0.8) || !(same_a || same_r);
            if !use_sim && !same_r {
                same_a = true;
            }
            let (a1, a2) = if same_a { ("a", "a") } else { ("_", "_") };
            let (r1, r2) = if same_r { ("t", "t") } else { ("_", "_") };
            let (n1, n2) = if use_sim { ("n1", "n2") } else { ("_", "_") };
            let mut atoms = vec![
                r.atom("x", Some(r1), Some(a1), Some(n1)),
                r.atom("y", Some(r2), Some(a2), Some(n2)),
            ];
            if use_sim {
                atoms.push(sim);
            }
            format!("{} {arrow} eq(x, y)", atoms.join(", "))
        };
        let _ = writeln!(text, "{kind} rule{j}: {body};");
    }

    let ndcs = rng.random_range(0..=shape.max_dcs);
    for j in 0..ndcs {
        // mostly constrain relations that soft rules merge, or their referrers
        let ri = match soft_on.get(rng.random_range(0..soft_on.len().max(1))) {
            Some(&s) if rng.random_bool(0.8) => {
                let referrers: Vec<usize> =
                    (0..rels.len()).filter(|&i| rels[i].target == Some(s)).collect();
                if !referrers.is_empty() && rng.random_bool(0.5) {
                    referrers[rng.random_range(0..referrers.len())]
                } else {
                    s
                }
            }
            _ => rng.random_range(0..rels.len()),
        };
        let r = &rels[ri];
        let body = match rng.random_range(0..6) {
            // referrers of one entity never carry both of two categories,
            // so merging two referenced entities can clash
            2 | 3 if r.target.is_some() => {
                let v1 = rng.random_range(0..CATEGORIES.len());
                let v2 = (v1 + 1) % CATEGORIES.len();
                format!(
                    "{}, {}",
                    r.atom("_", Some("x"), Some(&format!("\"{}\"", CATEGORIES[v1])), None),
                    r.atom("_", Some("x"), Some(&format!("\"{}\"", CATEGORIES[v2])), None)
                )
            }
            0 => format!(
                "{}, {}, a != a2",
                r.atom("x", None, Some("a"), None),
                r.atom("x", None, Some("a2"), None)
            ),
            1 if r.target.is_some() => format!(
                "{}, {}, x != y",
                r.atom("x", Some("t"), None, None),
                r.atom("y", Some("t"), None, None)
            ),
            // a third category stays compatible with both
            _ => {
                let v1 = rng.random_range(0..CATEGORIES.len());
                let v2 = (v1 + 1) % CATEGORIES.len();
                format!(
                    "{}, {}",
                    r.atom("x", None, Some(&format!("\"{}\"", CATEGORIES[v1])), None),
                    r.atom("x", None, Some(&format!("\"{}\"", CATEGORIES[v2])), None)
                )
            }
        };
        let _ = writeln!(text, "deny dc{j}: {body};");
    }

    let spec = parse_spec(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
    let mut b = Database::builder();
    for r in &rels {
        let arity = if r.target.is_some() { 4 } else { 3 };
        b.relation(&r.name, arity).unwrap();
    }
    for (rel, args) in rows {
        b.fact(&rel, args).unwrap();
    }
    let db = b.build();
    let sims = sim_all(&db, &spec, &Scorer::for_spec(&db, &spec), Exec::Sequential);
    Instance {
        seed,
        text,
        spec,
        db,
        sims,
    }
}

pub fn texts(db: &Database, pairs: &BTreeSet<er_core::MergePair>) -> Vec<(String, String)> {
    pairs.iter().map(|p| p.texts(db)).collect()
}

const TITLES: [&str; 5] = ["echoes", "echoes (live)", "echo", "time", "time (remix)"];
const BANDS: [&str; 4] = ["pink floyd", "the pink floyd", "pink floid", "yes"];

/// Bands, songs and album positions with random contents: similar titles by
/// the same lyricist and band may merge, a song holds one position per album.
pub fn generate_music(seed: u64, max_entities: usize) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let bands = rng.random_range(2..=3);
    let songs = rng.random_range(4..=(max_entities - bands).min(9));
    let hard_bands = rng.random_bool(0.5);
    let mut text = String::from(
        "relation Band(bid:id, name:short, year:val) merge [bid];
relation Song(sid:id, title:short, lyricist:val, bid:id) merge [sid, bid];
relation Appear(sid:id, album:val, position:val);
",
    );
    let _ = writeln!(
        text,
        "{} bands: Band(x,n,y), Band(x2,n2,y), sim:jw(n,n2) >= {} {} eq(x,x2);",
        if hard_bands { "hard" } else { "soft" },
        [80, 85, 90][rng.random_range(0..3)],
        if hard_bands { "=>" } else { "~>" },
    );
    let _ = writeln!(
        text,
        "soft songs: Song(x,t,l,b), Song(y,t2,l,b), sim:jw(t,t2) >= {} ~> eq(x,y);",
        [75, 80, 85][rng.random_range(0..3)],
    );
    text.push_str("deny positions: Appear(x,a,p), Appear(x,a,p2), p != p2;\n");
    let spec = parse_spec(&text).unwrap();

    let mut b = Database::builder();
    b.relation("Band", 3).unwrap();
    b.relation("Song", 4).unwrap();
    b.relation("Appear", 3).unwrap();
    let e = |s: String| Constant::entity(s);
    let v = |s: &str| Constant::value(s);
    for i in 0..bands {
        let year = if rng.random_bool(0.75) { "1967" } else { "1971" };
        b.fact("Band", vec![e(format!("b{i}")), v(pick(&mut rng, &BANDS)), v(year)])
            .unwrap();
    }
    for i in 0..songs {
        let lyricist = if rng.random_bool(0.1) {
            Constant::null()
        } else {
            v(if rng.random_bool(0.75) { "waters" } else { "gilmour" })
        };
        let band = e(format!("b{}", rng.random_range(0..bands)));
        b.fact("Song", vec![e(format!("s{i}")), v(pick(&mut rng, &TITLES)), lyricist, band])
            .unwrap();
        if rng.random_bool(0.6) {
            let album = if rng.random_bool(0.8) { "wish" } else { "meddle" };
            let pos = rng.random_range(1..=3).to_string();
            b.fact("Appear", vec![e(format!("s{i}")), v(album), v(&pos)]).unwrap();
        }
    }
    let db = b.build();
    let sims = sim_all(&db, &spec, &Scorer::for_spec(&db, &spec), Exec::Sequential);
    Instance {
        seed,
        text,
        spec,
        db,
        sims,
    }
}

/// The random family used by the acceptance suite: generic instances on
/// even seeds, music instances on odd ones.
pub fn family(seed: u64, shape: Shape) -> Instance {
    if seed % 2 == 0 {
        generate(seed, shape)
    } else {
        generate_music(seed, shape.max_entities)
    }
}
