//! Bessel functions of the first kind, integer order.
//!
//! Miller's backward recurrence started well above the requested order and
//! normalized with `J₀(x) + 2 Σ J₂ₖ(x) = 1`.

/// `J_0(x) ..= J_max_order(x)`.
pub fn bessel_j_table(max_order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; max_order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = max_order.max(ax.ceil() as usize);
    // start order: enough headroom for the recurrence to forget its seed
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;

    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / ax * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{k-1}
        if k - 1 <= max_order {
            out[k - 1] = j_cur;
        }
        if k <= max_order {
            out[k] = j_next;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            let s = 1e-250;
            j_cur *= s;
            j_next *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm += j_cur;
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (m, v) in out.iter_mut().enumerate() {
            if m % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_m(x)` for any integer order, using `J_{−m} = (−1)^m J_m`.
pub fn bessel_j(m: i64, x: f64) -> f64 {
    let n = m.unsigned_abs() as usize;
    let v = bessel_j_table(n, x)[n];
    if m < 0 && n % 2 == 1 {
        -v
    } else {
        v
    }
}
