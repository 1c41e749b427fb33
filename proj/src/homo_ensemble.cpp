#include "gtclust/homo_ensemble.hpp"

#include "gtclust/hetero_consensus.hpp"

#include <atomic>
#include <string>
#include <thread>

namespace gtclust {

namespace {

ClusterModelConfig config_for_run(const HomogeneousConfig& cfg, int i) {
    ClusterModelConfig c = cfg.base;
    c.seed = mix_seed(cfg.seed_stream, static_cast<std::uint64_t>(i));
    if (!cfg.param_jitter.empty()) {
        const ParamJitter& j = cfg.param_jitter[static_cast<size_t>(i) % cfg.param_jitter.size()];
        if (j.linkage) c.linkage = *j.linkage;
        if (j.n_init) c.n_init = *j.n_init;
        if (j.max_iter) c.max_iter = *j.max_iter;
        if (j.tol) c.tol = *j.tol;
    }
    return c;
}

}  // namespace

EnsembleRun run_homogeneous(const FeatureMatrix& m, const HomogeneousConfig& cfg) {
    if (cfg.q < 1) throw Error("run_homogeneous: q must be >= 1");
    cfg.base.validate(m.rows());

    EnsembleRun run;
    run.partitions.resize(static_cast<size_t>(cfg.q));
    std::vector<std::string> errors(static_cast<size_t>(cfg.q));

    auto work = [&](int i) {
        try {
            run.partitions[static_cast<size_t>(i)] = run_base(m, config_for_run(cfg, i));
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(i)] = e.what();
        }
    };

    const int width = std::min(cfg.threads, cfg.q);
    if (width <= 1) {
        for (int i = 0; i < cfg.q; ++i) work(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(width));
        for (int w = 0; w < width; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < cfg.q; i = next.fetch_add(1)) work(i);
            });
        for (auto& t : pool) t.join();
    }

    for (int i = 0; i < cfg.q; ++i)
        if (!errors[static_cast<size_t>(i)].empty())
            throw Error("run " + std::to_string(i) + ": " + errors[static_cast<size_t>(i)]);
    return run;
}

Partition consensus_labels(const EnsembleRun& run, int k) {
    if (k < 2) throw Error("consensus_labels: k must be >= 2");
    run.validate();
    ConsensusMatrix cm = co_association(run);
    Matrix dist = Matrix::Ones(cm.size(), cm.size()) - cm.data;
    Partition p = agglomerative_precomputed(dist, k, Linkage::Average);
    p.source_tag = "consensus:" + run.partitions.front().source_tag;
    return p;
}

}  // namespace gtclust
