#![allow(dead_code)]

use serde_json::{json, Value};

/// Small synthetic problem with one proposed method and both baselines.
pub fn small_config() -> Value {
    json!({
        "dataset": { "synthetic": { "n": 40, "teacher": { "dims": [3, 4, 1], "activation": "tanh" } } },
        "network": { "dims": [3, 4, 1], "activation": "tanh", "regularizer": { "l2": 0.01 } },
        "loss": "l2",
        "proposed": [{
            "upperbound": { "first_order": { "gamma": 0.01 } },
            "schedule": { "inverse_root": { "c": 1.0 } },
            "max_outer_iterations": 60,
            "grad_norm_tol": 1e-9
        }],
        "baselines": [
            { "method": "bp_clr", "rate": 0.05, "max_iterations": 30, "grad_norm_tol": 1e-9 },
            { "method": "adagrad", "max_iterations": 30, "grad_norm_tol": 1e-9 }
        ],
        "seeds": [4, 5]
    })
}

/// A proximal run on a block that is not strongly convex; it fails at the
/// curvature gate.
pub fn failing_config() -> Value {
    let mut v = small_config();
    v["network"]["regularizer"] = json!("none");
    v["proposed"] = json!([{
        "upperbound": { "proximal": { "gamma": 0.1 } },
        "unit_stepsize": true,
        "max_outer_iterations": 10,
        "grad_norm_tol": 1e-9
    }]);
    v["baselines"] = json!([]);
    v
}
