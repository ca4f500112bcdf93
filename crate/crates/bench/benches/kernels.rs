use afzp_core::classify::{equiv_unitary, intertwine, ksearch, lift, lift_with, LiftOrder, PairSource};
use afzp_core::crossed::CrossedPresentation;
use afzp_core::kinv::invariant_of;
use afzp_core::matrix::Mat;
use afzp_core::system::decompose;
use afzp_core::towers::{product_tower, resorted_product_tower};
use afzp_core::{CanonicalSystem, FieldContext, KPair, Piece, Scalar};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn ctx(p: u32) -> FieldContext {
    FieldContext::with_default_order(p).unwrap()
}

fn field(c: &mut Criterion) {
    let f = ctx(3);
    let a = &(&Scalar::root(&f, 5) + &Scalar::from_int(&f, 2)) + &Scalar::root(&f, 17);
    let b = &Scalar::root(&f, 7) - &Scalar::from_int(&f, 3);
    c.bench_function("scalar mul Q(zeta_36)", |bench| bench.iter(|| black_box(&a) * black_box(&b)));
    c.bench_function("scalar inv Q(zeta_36)", |bench| bench.iter(|| black_box(&a).inv().unwrap()));
    let m = Mat::from_fn(&f, 9, 9, |i, j| Scalar::root(&f, (i * 9 + j) as i64));
    c.bench_function("mat mul 9x9 Q(zeta_36)", |bench| bench.iter(|| black_box(&m) * black_box(&m)));
}

fn crossed(c: &mut Criterion) {
    let f = ctx(3);
    let s = CanonicalSystem::new(&f, vec![Piece::Fixed { exponents: vec![0, 1, 2] }, Piece::Cycle { n: 2 }]).unwrap();
    c.bench_function("crossed presentation fixed M_3 + cycle M_2, p=3", |bench| bench.iter(|| CrossedPresentation::new(black_box(&s))));
    let cp = CrossedPresentation::new(&s);
    let x = cp.canonical_unitary();
    c.bench_function("crossed identify, p=3", |bench| bench.iter(|| cp.identify(black_box(&x))));
    c.bench_function("K-invariant, p=3", |bench| bench.iter(|| invariant_of(black_box(&s))));
    let fd = s.to_system();
    c.bench_function("decompose, p=3", |bench| bench.iter(|| decompose(black_box(&fd)).unwrap()));
}

fn classify(c: &mut Criterion) {
    let f = ctx(2);
    let a = CanonicalSystem::new(&f, vec![Piece::Fixed { exponents: vec![0, 1] }]).unwrap();
    let b = CanonicalSystem::new(&f, vec![Piece::Fixed { exponents: vec![0, 0, 1, 1] }, Piece::Cycle { n: 2 }]).unwrap();
    let (ia, ib) = (invariant_of(&a), invariant_of(&b));
    c.bench_function("ksearch bound 3, p=2", |bench| bench.iter(|| ksearch(black_box(&ia), black_box(&ib), 3, true)));
    let kp: KPair = ksearch(&ia, &ib, 3, true).into_iter().next().expect("some pair");
    c.bench_function("lift, p=2", |bench| bench.iter(|| lift(black_box(&kp), &a, &b).unwrap()));
    let h1 = lift_with(&kp, &a, &b, LiftOrder::Canonical).unwrap();
    let h2 = lift_with(&kp, &a, &b, LiftOrder::Reversed).unwrap();
    c.bench_function("equiv_unitary, p=2", |bench| bench.iter(|| equiv_unitary(black_box(&h1), black_box(&h2)).unwrap()));
}

fn towers(c: &mut Criterion) {
    let f = ctx(2);
    let (ta, tb) = (product_tower(&f, 3).unwrap(), resorted_product_tower(&f, 3).unwrap());
    let mut group = c.benchmark_group("intertwine");
    group.sample_size(10);
    group.bench_function("product tower p=2 depth 3", |bench| bench.iter(|| intertwine(&ta, &tb, &PairSource::Auto { bound: 3 }, 3).unwrap()));
    group.finish();
}

criterion_group!(benches, field, crossed, classify, towers);
criterion_main!(benches);
