use num_complex::Complex64;
use proptest::prelude::*;
use pulsenet::nn::{complex_conv1d, split_relu, ComplexKernel, ComplexTensor, Mode, SplitBatchNorm, Tensor3};

fn tensor(shape: [usize; 3]) -> impl Strategy<Value = Tensor3<f64>> {
    proptest::collection::vec(-1.0f64..1.0, shape.iter().product::<usize>())
        .prop_map(move |v| Tensor3::from_vec(shape, v).unwrap())
}

fn complex(shape: [usize; 3]) -> impl Strategy<Value = ComplexTensor<f64>> {
    (tensor(shape), tensor(shape)).prop_map(|(re, im)| ComplexTensor::new(re, im).unwrap())
}

fn scalar() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| Complex64::new(r, i))
}

fn scale(x: &ComplexTensor<f64>, a: Complex64) -> ComplexTensor<f64> {
    let mut out = x.clone();
    for ((r, i), (&xr, &xi)) in
        out.re.data_mut().iter_mut().zip(out.im.data_mut()).zip(x.re.data().iter().zip(x.im.data()))
    {
        let v = a * Complex64::new(xr, xi);
        *r = v.re;
        *i = v.im;
    }
    out
}

fn add(x: &ComplexTensor<f64>, y: &ComplexTensor<f64>) -> ComplexTensor<f64> {
    let mut out = x.clone();
    out.re.add_assign(&y.re);
    out.im.add_assign(&y.im);
    out
}

fn rel_diff(a: &ComplexTensor<f64>, b: &ComplexTensor<f64>) -> f64 {
    let all = |t: &ComplexTensor<f64>| t.re.data().iter().chain(t.im.data()).copied().collect::<Vec<_>>();
    let (a, b) = (all(a), all(b));
    let s = a.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    a.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / s
}

fn setup() -> impl Strategy<Value = (ComplexTensor<f64>, ComplexTensor<f64>, ComplexKernel<f64>, Complex64, Complex64)>
{
    (1usize..3, 1usize..4, 1usize..4, 1usize..6, 6usize..20).prop_flat_map(|(b, c, o, m, l)| {
        (
            complex([b, c, l]),
            complex([b, c, l]),
            (tensor([o, c, m]), tensor([o, c, m])).prop_map(|(r, i)| ComplexKernel::new(r, i).unwrap()),
            scalar(),
            scalar(),
        )
    })
}

fn kernel_combo(k1: &ComplexKernel<f64>, k2: &ComplexKernel<f64>, a: Complex64, b: Complex64) -> ComplexKernel<f64> {
    let as_t = |k: &ComplexKernel<f64>| ComplexTensor { re: k.re.clone(), im: k.im.clone() };
    let c = add(&scale(&as_t(k1), a), &scale(&as_t(k2), b));
    ComplexKernel::new(c.re, c.im).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_is_linear_in_the_input((x, y, k, a, b) in setup()) {
        let lhs = complex_conv1d(&add(&scale(&x, a), &scale(&y, b)), &k, 1, 0).unwrap();
        let rhs = add(
            &scale(&complex_conv1d(&x, &k, 1, 0).unwrap(), a),
            &scale(&complex_conv1d(&y, &k, 1, 0).unwrap(), b),
        );
        prop_assert!(rel_diff(&lhs, &rhs) <= 1e-6);
    }

    #[test]
    fn conv_is_linear_in_the_kernel((x, _y, k, a, b) in setup(), seed in 0u64..1000) {
        // Second kernel: a conjugated, shuffled copy keeps the shapes aligned.
        let mut k2 = k.clone();
        k2.im = k.im.map(|v| -v);
        k2.re.data_mut().rotate_left((seed as usize) % k.re.data().len());
        let lhs = complex_conv1d(&x, &kernel_combo(&k, &k2, a, b), 1, 1.min(k.taps() / 2)).unwrap();
        let pad = 1.min(k.taps() / 2);
        let rhs = add(
            &scale(&complex_conv1d(&x, &k, 1, pad).unwrap(), a),
            &scale(&complex_conv1d(&x, &k2, 1, pad).unwrap(), b),
        );
        prop_assert!(rel_diff(&lhs, &rhs) <= 1e-6);
    }

    #[test]
    fn real_inputs_stay_real(
        (x, _y, k, _a, _b) in setup(),
        gamma in proptest::collection::vec(0.1f64..2.0, 6),
        beta in proptest::collection::vec(-1.0f64..1.0, 3),
    ) {
        let mut x = x;
        x.im = x.im.map(|_| 0.0);
        let mut k = k;
        k.im = k.im.map(|_| 0.0);
        let y = complex_conv1d(&x, &k, 1, 0).unwrap();
        prop_assert!(y.im.data().iter().all(|&v| v == 0.0));
        prop_assert!(split_relu(&y).im.data().iter().all(|&v| v == 0.0));

        let c = x.shape()[1];
        let mut bn = SplitBatchNorm::<f64>::new(c);
        for p in bn.store.iter_mut() {
            match p.name.rsplit('.').next() {
                // Layout (plane, channel): real plane first.
                Some("gamma") => p.value.copy_from_slice(&gamma[..2 * c]),
                Some("beta") => {
                    p.value[..c].copy_from_slice(&beta[..c]);
                    p.value[c..].iter_mut().for_each(|v| *v = 0.0);
                }
                _ => {}
            }
        }
        if x.shape()[0] >= 2 {
            let out = bn.forward(&x, Mode::Train).unwrap();
            prop_assert!(out.im.data().iter().all(|&v| v == 0.0));
        }
        let out = bn.forward(&x, Mode::Eval).unwrap();
        prop_assert!(out.im.data().iter().all(|&v| v == 0.0));
    }
}
