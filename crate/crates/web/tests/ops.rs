use kpzlab_web::{duality_check, geodesic_points, tree_edges};

#[test]
fn tree_edges_cover_the_window() {
    let csv = tree_edges(1, 16, 64).unwrap();
    assert!(csv.starts_with("x1,y1,x2,y2,kind\n"));
    assert_eq!(csv.lines().filter(|l| l.ends_with("tree_down")).count(), 16 * 16);
    assert!(csv.lines().any(|l| l.ends_with("portrait_up")));
}

#[test]
fn geodesic_runs_between_the_endpoints() {
    let pts = geodesic_points(3, -4, -4, 5, 2).unwrap();
    assert_eq!(pts.len(), 2 * (9 + 6 + 1));
    assert_eq!(&pts[..2], &[-4, -4]);
    assert_eq!(&pts[pts.len() - 2..], &[5, 2]);
}

#[test]
fn duality_matches() {
    let r = duality_check(2, 24, 96).unwrap();
    assert_eq!((r[0], r[1]), (1.0, 1.0));
}
