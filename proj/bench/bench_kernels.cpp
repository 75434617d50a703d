// Times the serial reference path against the OpenMP path on the three
// batch kernels that dominate runtime: batched attribution, the training
// gradient, and Monte Carlo transport cost. Results must match bit-exactly;
// the benchmark asserts that while it measures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "otflow/attribution.hpp"
#include "otflow/ot_oracle.hpp"
#include "otflow/parallel.hpp"
#include "otflow/rectflow.hpp"

using namespace otflow;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename Fn>
double timed(Fn&& fn) {
    const auto start = Clock::now();
    fn();
    return ms_since(start);
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-24s serial %8.1f ms   openmp %8.1f ms   speedup %.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("thread budget: %d\n", par::thread_budget());

    RngStream rng(42, 0);
    const int d = 10;
    const GaussianPair pair = seeded_gaussian_pair(d, rng);
    const auto oracle = std::make_shared<GaussianOtOracleField>(pair.g0, pair.g1);

    MlpSpec score_spec;
    score_spec.input_dim = d;
    score_spec.hidden = {32, 32};
    RngStream score_rng(42, 1);
    const MlpScore score(score_spec, score_rng);

    // Batched attribution over many inputs.
    std::vector<Vector> inputs;
    RngStream eval_rng(42, 2);
    for (int j = 0; j < 256; ++j) inputs.push_back(pair.g1.sample(eval_rng));

    std::vector<AttributionVector> se, pa;
    const double t_attr_serial = timed([&] {
        par::force_serial(true);
        se = transport_flow_attribution_batch(score, *oracle, inputs, 100);
    });
    const double t_attr_parallel = timed([&] {
        par::force_serial(false);
        pa = transport_flow_attribution_batch(score, *oracle, inputs, 100);
    });
    bool attr_equal = true;
    for (std::size_t j = 0; j < se.size(); ++j) {
        for (int i = 0; i < d; ++i) {
            if (se[j].values[i] != pa[j].values[i]) attr_equal = false;
        }
    }
    report("attribution batch", t_attr_serial, t_attr_parallel, attr_equal);

    // Training gradient on one large batch.
    MlpSpec flow_spec;
    flow_spec.input_dim = d;
    flow_spec.with_time = true;
    flow_spec.output_dim = d;
    RngStream net_rng(42, 3);
    const Mlp net(flow_spec, net_rng);

    std::vector<BatchSample> batch(2048);
    RngStream batch_rng(42, 4);
    for (auto& s : batch) {
        s.z0 = pair.g0.sample(batch_rng);
        s.z1 = pair.g1.sample(batch_rng);
        s.t = batch_rng.next_double();
    }
    std::vector<double> grad_serial, grad_parallel;
    double loss_serial = 0.0, loss_parallel = 0.0;
    const double t_grad_serial = timed([&] {
        par::force_serial(true);
        for (int rep = 0; rep < 20; ++rep)
            loss_serial = rf_loss_batch(net, batch, grad_serial);
    });
    const double t_grad_parallel = timed([&] {
        par::force_serial(false);
        for (int rep = 0; rep < 20; ++rep)
            loss_parallel = rf_loss_batch(net, batch, grad_parallel);
    });
    bool grad_equal = loss_serial == loss_parallel;
    for (std::size_t p = 0; p < grad_serial.size(); ++p) {
        if (grad_serial[p] != grad_parallel[p]) grad_equal = false;
    }
    report("rf gradient batch", t_grad_serial, t_grad_parallel, grad_equal);

    // Monte Carlo transport cost of the closed-form map.
    const AffineMap map = brenier_map(pair.g0, pair.g1);
    const std::size_t n_mc = 200000;
    std::vector<Vector> samples;
    samples.reserve(n_mc);
    RngStream mc_rng(42, 5);
    for (std::size_t i = 0; i < n_mc; ++i) samples.push_back(pair.g0.sample(mc_rng));

    auto mc_cost = [&] {
        return par::chunked_sum(n_mc, 1024, [&](std::size_t i) {
                   return norm2_sq(map.apply(samples[i]) - samples[i]);
               }) /
               static_cast<double>(n_mc);
    };
    double cost_serial = 0.0, cost_parallel = 0.0;
    const double t_mc_serial = timed([&] {
        par::force_serial(true);
        for (int rep = 0; rep < 5; ++rep) cost_serial = mc_cost();
    });
    const double t_mc_parallel = timed([&] {
        par::force_serial(false);
        for (int rep = 0; rep < 5; ++rep) cost_parallel = mc_cost();
    });
    report("monte carlo cost", t_mc_serial, t_mc_parallel,
           cost_serial == cost_parallel);

    return 0;
}
