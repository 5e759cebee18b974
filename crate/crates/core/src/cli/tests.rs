use super::*;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("thetanull").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn complex_parsing() {
    let cases = [
        ("i", (0.0, 1.0)),
        ("-i", (0.0, -1.0)),
        ("2i", (0.0, 2.0)),
        ("1.5i", (0.0, 1.5)),
        ("0.5+i", (0.5, 1.0)),
        ("0.2+1.4i", (0.2, 1.4)),
        ("-0.1-2i", (-0.1, -2.0)),
        ("1e-3+2e-1i", (1e-3, 0.2)),
        (" 3 ", (3.0, 0.0)),
    ];
    for (s, (re, im)) in cases {
        assert_eq!(parse_complex(s).unwrap(), Complex64::new(re, im), "{s}");
    }
    for s in ["", "x", "1+2", "ii", "1+2j"] {
        assert!(parse_complex(s).is_err(), "{s}");
    }
    for z in [
        Complex64::new(0.1, 1.0),
        Complex64::new(-0.3, 0.7),
        Complex64::new(1e-17, 2.5),
    ] {
        assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }
}

#[test]
fn point_specs() {
    for s in ["0", "random", "frac:1,0:0,1:4", "real:0.1,0.2:0.3,-0.4"] {
        assert_eq!(s.parse::<PointSpec>().unwrap().to_string(), s);
    }
    for s in ["", "frac:1:2", "real:a:b", "frac:1:1:x"] {
        assert!(s.parse::<PointSpec>().is_err(), "{s}");
    }
    let tau = crate::ppav::product_ppav(&[Complex64::new(0.0, 1.0)]).unwrap();
    let p = "frac:1:1:2".parse::<PointSpec>().unwrap();
    assert_eq!(
        p.resolve(&tau, 0, 0).unwrap(),
        vec![Complex64::new(0.5, 0.5)]
    );
    assert!("frac:1,0:1,0:2"
        .parse::<PointSpec>()
        .unwrap()
        .resolve(&tau, 0, 0)
        .is_err());
    let r = PointSpec::Random;
    assert_ne!(
        r.resolve(&tau, 0, 0).unwrap(),
        r.resolve(&tau, 0, 1).unwrap()
    );
}

#[test]
fn count_command() {
    let (code, out, _) = run_args(&["count", "--product", "i,2i", "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["theta_n"], 7);
    assert_eq!(v["result"]["achieves_bound"], true);
    assert_eq!(v["config"]["eps"], 1e-9);
    assert_eq!(v["config"]["vanish_tol"], 1e-6);

    let (code, out, err) = run_args(&[
        "count",
        "--product",
        "-0.45+0.95i,-0.2+1.1i",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["theta_n"], 7);

    let (code, out, _) = run_args(&[
        "count",
        "--product",
        "i",
        "--order",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        (
            v["result"]["theta_n"].as_u64(),
            v["result"]["bound"].as_u64()
        ),
        (Some(1), Some(4))
    );
}

#[test]
fn usage_errors() {
    for args in [
        &["count"][..],
        &["count", "--product", "i", "--random", "2"],
        &["count", "--product", "i", "--eps", "1e-6"],
        &["count", "--product", "-i"],
        &["count", "--product", "q"],
        &["count", "--random", "9"],
        &["count", "--file", "/nonexistent/tau.json"],
        &["hyperelliptic", "--genus", "21"],
        &["rank", "--random", "2", "--y", "frac:1:1:2"],
        &["bogus"],
    ] {
        let (code, out, err) = run_args(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}: {out} {err}");
        assert!(!err.is_empty());
    }
    assert_eq!(run_args(&["--help"]).0, EXIT_OK);
}

#[test]
fn hyperelliptic_and_tables() {
    let (code, out, _) = run_args(&["hyperelliptic", "--genus", "4", "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"]["formula"], 130);
    assert_eq!(v["result"]["enumerated"], 130);

    let (code, out, _) = run_args(&[
        "bound-table",
        "--g-max",
        "5",
        "--m-max",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "g,theta2_bound,hyperelliptic,cor_m1,cor_m2");
    let second: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(second, ["1", "7", "37", "175", "781"]);
    assert_eq!(lines[2].split(',').nth(4), Some("112"));

    let (code, out, _) = run_args(&[
        "bound-table",
        "--g-min",
        "3",
        "--g-max",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "g,theta2_bound,hyperelliptic,cor_m1,cor_m2,cor_m3\n");
}

#[test]
fn human_and_csv_views() {
    let (code, out, _) = run_args(&["count", "--product", "i,2i"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("thetanull count --product 0+1i,0+2i"));
    assert!(out.contains("  theta_n: 7\n"));
    let (code, out, _) = run_args(&["count", "--product", "i,2i", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let header = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let theta = header.iter().position(|h| h == "theta_n").unwrap();
    assert_eq!(&row[theta], "7");
    let inv = header.iter().position(|h| h == "invocation").unwrap();
    assert!(row[inv].starts_with("count --product 0+1i,0+2i"));
}

#[test]
fn invocation_reproduces_report() {
    let (code, first, _) = run_args(&[
        "rank", "--random", "2", "--seed", "3", "--y", "random", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["result"]["report"]["numerical_rank"], 16);
    let args: Vec<String> = serde_json::from_value(v["invocation"].clone()).unwrap();
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, second, _) = run_args(&refs);
    assert_eq!(code, 0);
    assert_eq!(first, second);
}

#[test]
fn quadrics_command() {
    for (taus, expected) in [("i", 0), ("i,2i", 1)] {
        let (code, out, _) = run_args(&["quadrics", "--product", taus, "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["result"]["kernel_dim"], expected);
    }
}
