use super::*;
use crate::error::Error;
use crate::spider::{parse_schemas, ColumnLocator};

fn schema() -> DatabaseSchema {
    let json = r#"[{
        "db_id": "perpetrator",
        "table_names_original": ["people", "perpetrator", "head"],
        "table_names": ["people", "perpetrator", "head"],
        "column_names_original": [[-1, "*"], [0, "People_ID"], [0, "Name"], [0, "Home Town"],
            [0, "is_homosexual"], [1, "Perpetrator_ID"], [1, "People_ID"], [1, "Year"],
            [2, "head_ID"], [2, "age"]],
        "column_names": [[-1, "*"], [0, "people id"], [0, "name"], [0, "home town"],
            [0, "is homosexual"], [1, "perpetrator id"], [1, "people id"], [1, "year"],
            [2, "head id"], [2, "age"]],
        "column_types": ["text", "number", "text", "text", "boolean", "number", "number",
            "number", "number", "number"],
        "primary_keys": [1, 5, 8],
        "foreign_keys": [[6, 1]]
    }]"#;
    parse_schemas(json, "test").unwrap().remove(0)
}

fn parse(sql: &str) -> SqlAst {
    parse_sql(sql, &schema()).unwrap_or_else(|e| panic!("{sql}: {e}"))
}

fn names(ast: &SqlAst) -> Vec<String> {
    let s = schema();
    extract_column_refs(ast)
        .iter()
        .map(|c| c.qualified_name(&s))
        .collect()
}

#[test]
fn count_with_condition() {
    let ast = parse("SELECT count(*) FROM head WHERE age > 56");
    assert_eq!(
        ast.select_items[0].expr,
        Expr::Aggregate {
            func: Aggregation::Count,
            distinct: false,
            arg: Box::new(Expr::Star { qualifier: None }),
        }
    );
    assert_eq!(ast.where_conjuncts.len(), 1);
    let Predicate::Cond(c) = &ast.where_conjuncts[0] else {
        panic!("expected condition")
    };
    assert_eq!(c.op, CmpOp::Gt);
    assert_eq!(c.right, Operand::Single(Expr::Value));
    let Expr::Column(col) = &c.left else {
        panic!("expected column")
    };
    assert_eq!(col.resolution, Some(ColumnLocator { table: 2, column: 1 }));
}

#[test]
fn at_separator_and_space_repair() {
    let ast = parse("select people@name from people where people@is homosexual = 'value'");
    assert_eq!(names(&ast), ["people.name", "people.is_homosexual"]);
    let unqualified = parse("SELECT name FROM people WHERE is homosexual = 'value'");
    assert_eq!(names(&unqualified), ["people.name", "people.is_homosexual"]);
    let spaced = parse("SELECT home town FROM people");
    assert_eq!(names(&spaced), ["people.home town"]);
}

#[test]
fn repair_only_for_schema_columns() {
    // `name id` is not a column, so the stray word is a syntax error
    assert!(parse_sql("SELECT name id FROM people", &schema()).is_err());
}

#[test]
fn misspelled_keywords_fail_at_start() {
    match parse_sql("SELEC name FRM people", &schema()) {
        Err(Error::Unparseable { offset, .. }) => assert_eq!(offset, 0),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse_sql("", &schema()), Err(Error::Unparseable { offset: 0, .. })));
}

#[test]
fn refs_in_document_order_across_subqueries() {
    let ast = parse("SELECT name FROM people WHERE people_id NOT IN (SELECT people_id FROM perpetrator)");
    assert_eq!(names(&ast), ["people.name", "people.people_id", "perpetrator.people_id"]);
    assert!(extract_column_refs(&parse("SELECT count(*) FROM head")).is_empty());
}

#[test]
fn aliases_resolve() {
    let ast = parse(
        "SELECT T1.name FROM people AS T1 JOIN perpetrator AS T2 ON T1.people_id = T2.people_id WHERE T2.year > 1990",
    );
    assert_eq!(
        names(&ast),
        ["people.name", "people.people_id", "perpetrator.people_id", "perpetrator.year"]
    );
}

#[test]
fn unknown_columns_stay_unresolved() {
    let ast = parse("SELECT people.ethnicity FROM people");
    let refs = extract_column_refs(&ast);
    assert_eq!(refs[0].resolution, None);
    assert_eq!(refs[0].column_name, "ethnicity");
    assert_eq!(refs[0].table_alias_or_name.as_deref(), Some("people"));
}

#[test]
fn literals_are_captured_before_placeholdering() {
    let parsed = parse_sql_with_literals(
        "SELECT name FROM people WHERE name = \"Black\" AND people_id > 3",
        &schema(),
    )
    .unwrap();
    assert_eq!(parsed.literals, ["Black", "3"]);
}

#[test]
fn set_operations_serialize_both_arms() {
    let ast = parse("SELECT name FROM people UNION SELECT name FROM people WHERE people_id = 1");
    let text = serialize(&ast);
    assert_eq!(
        text,
        "SELECT name FROM people UNION SELECT name FROM people WHERE people_id = 'value'"
    );
}

#[test]
fn no_where_keyword_without_conditions() {
    assert!(!serialize(&parse("SELECT name FROM people")).contains("WHERE"));
}

#[test]
fn conjunct_order_and_literals_do_not_matter() {
    let a = parse("SELECT name FROM people WHERE people_id = 1 AND name = 'x'");
    let b = parse("SELECT name FROM people WHERE name = 'y' AND people_id = 7");
    assert_ne!(a, b);
    assert_eq!(normalize(&a), normalize(&b));
    assert!(exact_match(&a, &b));
}

#[test]
fn alias_spelling_does_not_matter() {
    let a = parse("SELECT T1.name FROM people AS T1 JOIN perpetrator AS T2 ON T1.people_id = T2.people_id");
    let b = parse("SELECT p.name FROM people p JOIN perpetrator x ON x.people_id = p.people_id");
    let c = parse("SELECT people.name FROM people JOIN perpetrator ON people.people_id = perpetrator.people_id");
    assert_eq!(normalize(&a), normalize(&b));
    assert_eq!(normalize(&a), normalize(&c));
}

#[test]
fn normalized_text_reparses_to_itself() {
    for sql in [
        "SELECT name FROM people WHERE people_id NOT IN (SELECT people_id FROM perpetrator)",
        "SELECT T1.name, count(*) FROM people AS T1 JOIN perpetrator AS T2 ON T1.people_id = T2.people_id GROUP BY T1.name HAVING count(*) > 1 ORDER BY count(*) DESC LIMIT 3",
        "SELECT avg(age), max(age) - min(age) FROM head WHERE age BETWEEN 1 AND 5 OR (age < 3 AND NOT head_id = 2)",
        "SELECT DISTINCT name FROM people WHERE name LIKE '%a%' INTERSECT SELECT name FROM people WHERE home town != 'x'",
        "SELECT count(*) FROM (SELECT people_id FROM perpetrator GROUP BY people_id) AS sub",
        "SELECT name FROM people AS p WHERE EXISTS (SELECT 1 FROM perpetrator AS q WHERE q.people_id = p.people_id)",
        "SELECT name FROM people WHERE people_id IN (1, 2, -3) AND name IS NOT NULL",
    ] {
        let n = normalize(&parse(sql));
        let text = serialize(&n);
        let again = parse(&text);
        assert_eq!(again, n, "{sql}\n{text}");
        assert_eq!(normalize(&again), n, "{sql}");
    }
}

#[test]
fn correlated_reference_binds_to_outer_scope() {
    let ast = parse(
        "SELECT name FROM people AS p WHERE EXISTS (SELECT 1 FROM perpetrator AS q WHERE q.people_id = p.people_id)",
    );
    assert_eq!(names(&ast), ["people.name", "perpetrator.people_id", "people.people_id"]);
    let text = serialize(&normalize(&ast));
    assert!(text.contains("d1t1.people_id = t1.people_id"), "{text}");
}

#[test]
fn grouped_arithmetic_is_an_operand() {
    let ast = parse("SELECT name FROM head WHERE (age + 1) * 2 > 10");
    let Predicate::Cond(c) = &ast.where_conjuncts[0] else {
        panic!("expected condition")
    };
    assert!(matches!(c.left, Expr::Binary { op: ArithOp::Mul, .. }));
}

#[test]
fn irregular_identifiers_are_quoted() {
    let text = serialize(&parse("SELECT `Home Town` FROM people"));
    assert_eq!(text, "SELECT `home town` FROM people");
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn conjunct() -> impl Strategy<Value = String> {
        prop_oneof![
            (0..1000i32).prop_map(|v| format!("T1.people_id = {v}")),
            "[a-z]{1,6}".prop_map(|v| format!("T1.name != '{v}'")),
            (0..100i32).prop_map(|v| format!("T2.year > {v}")),
            Just("T1.people_id = T2.people_id".to_string()),
            (0..9i32, 10..20i32).prop_map(|(a, b)| format!("T2.year BETWEEN {a} AND {b}")),
        ]
    }

    proptest! {
        #[test]
        fn normalization_ignores_permutation_and_literals(
            parts in proptest::collection::vec(conjunct(), 1..5),
            rotate in 0usize..5,
        ) {
            let base = "SELECT T1.name FROM people AS T1 JOIN perpetrator AS T2 ON T1.people_id = T2.people_id WHERE ";
            let a = format!("{base}{}", parts.join(" AND "));
            let mut shuffled = parts.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rotate % len);
            shuffled.reverse();
            let b = format!("{base}{}", shuffled.join(" AND "));
            let (a, b) = (parse(&a), parse(&b));
            prop_assert!(exact_match(&a, &b));
            let n = normalize(&a);
            prop_assert_eq!(normalize(&n), n.clone());
            prop_assert_eq!(parse(&serialize(&n)), n);
        }
    }
}
