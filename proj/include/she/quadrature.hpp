#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace she::quad {

template <typename Scalar>
struct Result {
    Scalar value = 0;
    Scalar error = 0;
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar>
struct Segment {
    Scalar a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <typename Scalar, typename F>
Segment<Scalar> gauss_kronrod_15(const F& f, Scalar a, Scalar b) {
    using std::abs;
    const Scalar center = (a + b) / 2;
    const Scalar half = (b - a) / 2;
    const Scalar f_center = f(center);
    Scalar kronrod = f_center * Scalar(kWgk[7]);
    Scalar gauss = f_center * Scalar(kWg[3]);
    Scalar abs_sum = abs(kronrod);
    Scalar fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const Scalar dx = half * Scalar(kXgk[j]);
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        kronrod += Scalar(kWgk[j]) * (fv1[j] + fv2[j]);
        abs_sum += Scalar(kWgk[j]) * (abs(fv1[j]) + abs(fv2[j]));
        if (j % 2 == 1) gauss += Scalar(kWg[j / 2]) * (fv1[j] + fv2[j]);
    }
    const Scalar mean = kronrod / 2;
    Scalar asc = Scalar(kWgk[7]) * abs(f_center - mean);
    for (int j = 0; j < 7; ++j)
        asc += Scalar(kWgk[j]) * (abs(fv1[j] - mean) + abs(fv2[j] - mean));

    const Scalar value = kronrod * half;
    asc *= abs(half);
    abs_sum *= abs(half);
    Scalar err = abs((kronrod - gauss) * half);
    if (asc != 0 && err != 0) err = asc * std::min(Scalar(1), std::pow(200 * err / asc, Scalar(1.5)));
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    if (abs_sum > std::numeric_limits<Scalar>::min() / (50 * eps))
        err = std::max(err, 50 * eps * abs_sum);
    return {a, b, value, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature of f over the finite interval
// [a, b]. Bisects the worst segment until the summed error estimate drops
// below max(abs_tol, rel_tol * |value|).
template <typename Scalar, typename F>
Result<Scalar> integrate(const F& f, Scalar a, Scalar b, Scalar rel_tol = Scalar(1e-10),
                         Scalar abs_tol = Scalar(0), int max_intervals = 2000) {
    using std::abs;
    Result<Scalar> out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Segment<Scalar>> heap;
    heap.push(detail::gauss_kronrod_15<Scalar>(f, a, b));
    Scalar total = heap.top().value;
    Scalar total_err = heap.top().error;
    int n = 1;
    while (total_err > std::max(abs_tol, rel_tol * abs(total)) && n < max_intervals) {
        const auto worst = heap.top();
        heap.pop();
        const Scalar mid = (worst.a + worst.b) / 2;
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst);
            break;
        }
        const auto left = detail::gauss_kronrod_15<Scalar>(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_15<Scalar>(f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        ++n;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
    }
    auto copy = heap;
    total = 0;
    total_err = 0;
    while (!copy.empty()) {
        total += copy.top().value;
        total_err += copy.top().error;
        copy.pop();
    }
    out.value = total;
    out.error = total_err;
    out.intervals = n;
    out.converged = total_err <= std::max(abs_tol, rel_tol * abs(total));
    return out;
}

}  // namespace she::quad
