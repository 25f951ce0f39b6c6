use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use ttcc::calculus::Process;
use ttcc::constraint::{Constraint, Rel, Term};
use ttcc::dsl::{parse_process, parse_program, pretty, pretty_program, ParseError};

fn corpus() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<PathBuf> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension() == Some("ttcc".as_ref())).collect();
    files.sort();
    files
}

/// Each corpus program pretty-prints to its `.golden` file and parses back
/// to the same program. `UPDATE_GOLDEN=1` rewrites the golden files.
#[test]
fn golden_corpus() {
    let files = corpus();
    assert_eq!(files.len(), 20);
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for file in files {
        let src = fs::read_to_string(&file).unwrap();
        let prog = parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", file.display()));
        let printed = pretty_program(&prog);
        let golden = file.with_extension("golden");
        if update {
            fs::write(&golden, &printed).unwrap();
        }
        let expected = fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing {}", golden.display()));
        assert_eq!(printed, expected, "{}", file.display());
        assert_eq!(parse_program(&printed).unwrap(), prog, "{}", file.display());
    }
}

#[test]
fn located_errors() {
    type Case = (&'static str, fn(&ParseError) -> bool, (usize, usize));
    let cases: [Case; 5] = [
        ("", |e| matches!(e, ParseError::Syntax { .. }), (1, 1)),
        ("tell(x = 1", |e| matches!(e, ParseError::Syntax { .. }), (1, 11)),
        ("var x;\ntell(y = 1)", |e| matches!(e, ParseError::UnknownIdentifier { name, .. } if name == "y"), (2, 6)),
        ("def A(n) = tell(a = n);\nA(1, 2)", |e| matches!(e, ParseError::ArityMismatch { expected: 1, found: 2, .. }), (2, 1)),
        ("def A() = tell(a = 1);\ndef A() = 0;\nA()", |e| matches!(e, ParseError::Duplicate { .. }), (2, 1)),
    ];
    for (src, check, (line, col)) in cases {
        let err = parse_program(src).unwrap_err();
        assert!(check(&err), "{src:?}: {err:?}");
        let pos = err.position().unwrap();
        assert_eq!((pos.line, pos.col), (line, col), "{src:?}: {err}");
    }
    let err = parse_program("def A() = A();\nA()").unwrap_err();
    assert!(matches!(err, ParseError::UnguardedRecursion { ref cycle } if cycle == &["A", "A"]));
}

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "x", "y", "wp", "k#2"]).prop_map(String::from)
}

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0i64..100).prop_map(Term::Const),
        var().prop_map(Term::var),
        (var(), 1i64..5).prop_map(|(v, k)| Term::offset(v, k)),
    ]
}

fn atom() -> impl Strategy<Value = Constraint> {
    (var(), prop::sample::select(Rel::ALL.to_vec()), term()).prop_map(|(v, r, t)| Constraint::atom(Term::var(v), r, t))
}

fn constraint() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        4 => prop::collection::vec(atom(), 1..4).prop_map(Constraint::and_all),
        1 => Just(Constraint::True),
        1 => (var(), atom()).prop_map(|(v, a)| Constraint::exists(v.replace('#', "_"), a)),
    ]
}

fn process() -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![
        Just(Process::Null),
        constraint().prop_map(Process::tell),
        ("[A-C]", prop::collection::vec(0i64..9, 0..3)).prop_map(|(n, a)| Process::call(n, a)),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            (constraint(), inner.clone()).prop_map(|(c, p)| Process::ask(c, p)),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Process::par),
            (1u32..30, inner.clone()).prop_map(|(k, p)| Process::next(k, p)),
            (1u32..30, inner.clone()).prop_map(|(k, p)| Process::rep(k, p)),
            (prop::collection::vec("[t-v]", 1..3), constraint(), inner)
                .prop_map(|(vs, c, p)| Process::local(vs, c, p)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pretty_then_parse_is_identity(p in process()) {
        let text = pretty(&p);
        let back = parse_process(&text);
        prop_assert!(back.is_ok(), "{}: {:?}", text, back);
        prop_assert_eq!(back.unwrap(), p);
    }

    #[test]
    fn parser_is_total(src in "[a-z0-9 ()|&=<>!;,#~^.\\[\\]\\n-]{0,60}") {
        let _ = parse_program(&src);
    }

    #[test]
    fn parser_is_total_on_token_soup(words in prop::collection::vec(
        prop::sample::select(vec![
            "tell", "when", "do", "next", "rep", "local", "in", "def", "var", "persistent", "exists",
            "true", "false", "(", ")", "[", "]", "||", "&", "=", "!=", "<", "<=", "^", ";", ",", ".",
            "x", "A", "3", "-1", "0",
        ]),
        0..25,
    )) {
        let _ = parse_program(&words.join(" "));
    }
}
