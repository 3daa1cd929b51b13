//! Fixtures shared by the criterion benches.

use statica_core::catalog::{build, kottler};
use statica_core::{ChartMetric, ExampleDescriptor, ExampleName, Params, Point};

pub fn kottler4() -> ExampleDescriptor {
    kottler(4, 1.0, None, None).expect("catalog kottler builds")
}

pub fn example(name: ExampleName) -> ExampleDescriptor {
    build(name, &Params::default()).expect("catalog defaults build")
}

/// An interior point of a catalog chart: radius `r`, small fiber offsets.
pub fn point(chart: &ChartMetric, r: f64) -> Point {
    let mut x = vec![0.1; chart.dim()];
    x[0] = r;
    Point::new(x)
}
