//! Derivative-free simplex minimizer for the two prior hyperparameters.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once every vertex lies within this distance of the best one.
    pub xtol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-6,
            max_evals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: [f64; 2],
    pub value: f64,
    pub evals: usize,
}

/// Minimize `f` over ℝ² from `start` with initial edge lengths `step`.
pub fn minimize<F>(f: F, start: [f64; 2], step: [f64; 2], opts: NelderMeadOptions) -> Minimum
where
    F: Fn([f64; 2]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let evals = std::cell::Cell::new(0usize);
    let eval = |x: [f64; 2]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = [eval(simplex[0]), eval(simplex[1]), eval(simplex[2])];

    loop {
        // order vertices best to worst; ties keep insertion order
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = [simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]];
        values = [values[idx[0]], values[idx[1]], values[idx[2]]];

        let spread = simplex[1..]
            .iter()
            .map(|v| (v[0] - simplex[0][0]).abs().max((v[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread < opts.xtol || evals.get() >= opts.max_evals {
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };

        let xr = along(-ALPHA);
        let fr = eval(xr);
        if fr < values[0] {
            let xe = along(-GAMMA);
            let fe = eval(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
            continue;
        }
        if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[2] {
            let xc = along(-RHO);
            (xc, eval(xc))
        } else {
            let xc = along(RHO);
            (xc, eval(xc))
        };
        if fc < values[2].min(fr) {
            simplex[2] = xc;
            values[2] = fc;
            continue;
        }
        for i in 1..3 {
            simplex[i] = [
                simplex[0][0] + SIGMA * (simplex[i][0] - simplex[0][0]),
                simplex[0][1] + SIGMA * (simplex[i][1] - simplex[0][1]),
            ];
            values[i] = eval(simplex[i]);
        }
    }

    Minimum {
        x: simplex[0],
        value: values[0],
        evals: evals.get(),
    }
}
