use std::fs;

use popnet::config::{preset, GroupSpec, ScenarioConfig};
use popnet::output::{read_timeseries, write_bundle, write_timeseries};
use popnet::run;

fn point_mass() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.groups = vec![
        GroupSpec::new("left", 0.5, [20.0, 20.0], [-0.3, -0.3]),
        GroupSpec::new("right", 0.5, [80.0, 80.0], [0.7, 0.7]),
    ];
    cfg.sim.n_particles = 10;
    cfg.sim.t_final = 0.0;
    cfg
}

#[test]
fn point_mass_timeseries_has_exact_initial_values() {
    let cfg = point_mass();
    let res = run(&cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_bundle(tmp.path(), &cfg, &res, 1, 0.0).unwrap();
    let ts = read_timeseries(&tmp.path().join("timeseries.csv")).unwrap();
    assert_eq!(
        ts.header,
        ["t", "m_c_global", "m_v_global", "m_c_left", "m_c_right", "m_v_left", "m_v_right"]
    );
    assert_eq!(ts.rows, vec![vec![0.0, 50.0, 0.2, 20.0, 80.0, -0.3, 0.7]]);
}

#[test]
fn test1_first_row_has_leader_opinion_near_half() {
    let mut cfg = preset("test1_a").unwrap();
    cfg.sim.t_final = 0.0;
    cfg.sim.snapshot_times.clear();
    let res = run(&cfg).unwrap();
    let mut buf = Vec::new();
    let names: Vec<String> = cfg.groups.iter().map(|g| g.name.clone()).collect();
    write_timeseries(&mut buf, &names, &res.trace).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    let k = header.iter().position(|&h| h == "m_v_leaders").unwrap();
    assert_eq!(row[0], 0.0);
    // uniform on [0.4, 0.6] over 2500 agents: sd of the mean is about 0.0012
    assert!((row[k] - 0.5).abs() < 0.006, "{}", row[k]);
}

#[test]
fn files_reparse_to_emitted_values() {
    let mut cfg = preset("test2_b").unwrap();
    cfg.sim.n_particles = 400;
    cfg.sim.epsilon = 0.01;
    cfg.sim.t_final = 1.0;
    cfg.sim.snapshot_times = vec![0.5];
    let res = run(&cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_bundle(tmp.path(), &cfg, &res, 1, 0.0).unwrap();

    let ts = read_timeseries(&tmp.path().join("timeseries.csv")).unwrap();
    assert_eq!(ts.rows.len(), res.trace.len());
    for (row, m) in ts.rows.iter().zip(&res.trace) {
        assert!((row[1] - m.m_c_global).abs() <= 5e-9 * m.m_c_global.abs());
        assert!((row[2] - m.m_v_global).abs() <= 5e-9 * m.m_v_global.abs());
    }
    let t = ts.column("t").unwrap();
    assert!(t.windows(2).all(|w| w[0] < w[1]));

    // marginals: two kinds, masses sum to one each
    let snap = res.snapshot_at(0.5).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("marginals_t0.5.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["kind", "bin", "lo", "hi", "mass"]
    );
    let (mut v_mass, mut c_mass, mut v_rows, mut c_rows) = (0.0, 0.0, 0, 0);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let mass: f64 = rec[4].parse().unwrap();
        let lo: f64 = rec[2].parse().unwrap();
        let hi: f64 = rec[3].parse().unwrap();
        assert!(lo < hi);
        match &rec[0] {
            "v" => {
                v_mass += mass;
                v_rows += 1;
            }
            "c" => {
                c_mass += mass;
                c_rows += 1;
            }
            other => panic!("kind {other}"),
        }
    }
    assert_eq!(v_rows, cfg.output.bins_v);
    assert_eq!(c_rows, cfg.output.bins_c + 2);
    assert!((v_mass - 1.0).abs() < 1e-7 && (c_mass - 1.0).abs() < 1e-7);

    // joint: sparse records matching the in-memory histogram
    let text = fs::read_to_string(tmp.path().join("joint_t0.5.ndjson")).unwrap();
    let mut total = 0.0;
    for line in text.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let (iv, ic) = (rec["iv"].as_u64().unwrap() as usize, rec["ic"].as_u64().unwrap() as usize);
        let mass = rec["mass"].as_f64().unwrap();
        assert!(mass > 0.0);
        assert_eq!(mass, snap.hist.joint_at(iv, ic));
        assert_eq!(rec["t"].as_f64().unwrap(), 0.5);
        total += mass;
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn header_is_stable_across_runs() {
    let cfg = point_mass();
    let a = run(&cfg).unwrap();
    let mut other = cfg.clone();
    other.sim.seed = 99;
    let b = run(&other).unwrap();
    let names: Vec<String> = cfg.groups.iter().map(|g| g.name.clone()).collect();
    let header = |r: &popnet::RunResult| {
        let mut buf = Vec::new();
        write_timeseries(&mut buf, &names, &r.trace).unwrap();
        String::from_utf8(buf).unwrap().lines().next().unwrap().to_string()
    };
    assert_eq!(header(&a), header(&b));
}
