use calimetr_bench::fixture;

#[test]
fn fixture_is_reproducible() {
    let a = fixture(200, 4);
    let b = fixture(200, 4);
    assert_eq!(a.probs(), b.probs());
    assert_eq!(a.labels(), b.labels());
    assert_eq!((a.n(), a.k()), (200, 4));
}
