use std::sync::Arc;

use rankgeo::construct::{self, Construction, ConstructionRequest, Kind};
use rankgeo::verify::{self, SuiteConfig, Verdict};
use rankgeo::{CodeFile, FieldTower, QSystem, RankMetricCode, SystemFile};

#[test]
fn construction_outputs_reparse_to_equal_values() {
    let mut req = ConstructionRequest::new(Kind::ExistenceFamily, 3, 1, 4);
    (req.k, req.d) = (Some(2), Some(2));
    let out = construct::run(&req).unwrap();
    let Construction::Family(codes) = &out else { panic!("existence_family yields a family") };
    let files: Vec<CodeFile> = serde_json::from_str(&out.to_json(&req).unwrap()).unwrap();
    assert_eq!(files.len(), codes.len());
    for (f, c) in files.iter().zip(codes) {
        assert_eq!(&RankMetricCode::from_file(f).unwrap(), c);
        assert_eq!(f.request.as_ref().unwrap()["kind"], "existence_family");
    }

    let mut req = ConstructionRequest::new(Kind::Pseudoregulus, 2, 1, 4);
    req.k = Some(2);
    let out = construct::run(&req).unwrap();
    let file: SystemFile = serde_json::from_str(&out.to_json(&req).unwrap()).unwrap();
    let Construction::System { system, .. } = out else { panic!("pseudoregulus yields a system") };
    assert_eq!(QSystem::from_file(&file).unwrap(), system);
}

#[test]
fn reports_reparse_to_equal_values() {
    let t = Arc::new(FieldTower::new(2, 1, 4).unwrap());
    let code = construct::gabidulin(&t, 4, 2, None).unwrap();
    let report = vec![verify::check_antipodal(&code).unwrap(), verify::check_minsize(&t, 2, 3, 0).unwrap()];
    let json = verify::report_json(&report).unwrap();
    let back: Vec<Verdict> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    let cfg = SuiteConfig::default_suite(1);
    let back: SuiteConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
}
