#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "ada/defense.hpp"
#include "ada/nn.hpp"

namespace ada {

struct ClientState {
    int id = 0;
    Dataset shard;
    MomentState moment;
    std::mt19937_64 rng;

    ClientState(int id_, Dataset shard_, const ParamSet& shape, std::uint64_t seed)
        : id(id_), shard(std::move(shard_)), moment(MomentState::zeros_like(shape)), rng(seed) {
        if (shard.empty()) throw std::invalid_argument("ClientState: empty shard");
    }
};

struct RoundConfig {
    int local_iterations = 1;
    std::size_t batch_size = 1;
    double local_lr = 0.1;
    double server_lr = 1.0;
    Transform transform;

    void validate() const {
        if (local_iterations < 1) throw std::invalid_argument("local_iterations must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (local_lr <= 0.0) throw std::invalid_argument("local_lr must be > 0");
        if (server_lr < 0.0) throw std::invalid_argument("server_lr must be >= 0");
    }
};

// The only value that crosses the client/server boundary.
struct StandinMessage {
    int client_id = 0;
    std::uint64_t sample_count = 0;
    GradientSet payload;
};

// Seeded shuffle, then contiguous equal splits. Throws when the dataset
// cannot be divided into equal shards.
inline std::vector<ClientState> make_clients(const Dataset& data, int n_clients,
                                             const ParamSet& shape, std::uint64_t seed) {
    if (n_clients < 1) throw std::invalid_argument("make_clients: need at least one client");
    if (data.empty() || data.size() % static_cast<std::size_t>(n_clients) != 0)
        throw std::invalid_argument("make_clients: dataset does not split into equal shards");
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t shard_size = data.size() / static_cast<std::size_t>(n_clients);
    std::vector<ClientState> clients;
    clients.reserve(static_cast<std::size_t>(n_clients));
    for (int c = 0; c < n_clients; ++c) {
        Dataset shard;
        shard.reserve(shard_size);
        for (std::size_t i = 0; i < shard_size; ++i)
            shard.push_back(data[idx[static_cast<std::size_t>(c) * shard_size + i]]);
        clients.emplace_back(c, std::move(shard), shape, seed + 1000 + static_cast<std::uint64_t>(c));
    }
    return clients;
}

// One local training round: seeded minibatch SGD from the global params,
// round gradient recovered as (w_start - w_end)/lr, then transformed.
inline StandinMessage local_round(ClientState& client, const Params& global, const MlpSpec& spec,
                                  const RoundConfig& cfg) {
    cfg.validate();
    if (client.shard.empty()) throw std::invalid_argument("local_round: empty shard");

    Params w = global;
    const std::size_t bs = std::min(cfg.batch_size, client.shard.size());
    std::uniform_int_distribution<std::size_t> pick(0, client.shard.size() - 1);
    for (int it = 0; it < cfg.local_iterations; ++it) {
        Dataset batch;
        batch.reserve(bs);
        if (bs == client.shard.size()) {
            batch = client.shard;
        } else {
            for (std::size_t k = 0; k < bs; ++k) batch.push_back(client.shard[pick(client.rng)]);
        }
        auto [loss, grads] = batch_loss_and_grad(spec, w, batch);
        (void)loss;
        w = sgd_step(w, grads, cfg.local_lr);
    }

    GradientSet g = global;
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
        auto delta = [&](Tensor& gt, const Tensor& start, const Tensor& end) {
            for (std::size_t i = 0; i < gt.numel(); ++i)
                gt(i) = (start(i) - end(i)) / cfg.local_lr;
        };
        delta(g.layers[l].w, global.layers[l].w, w.layers[l].w);
        delta(g.layers[l].b, global.layers[l].b, w.layers[l].b);
    }

    StandinMessage msg;
    msg.client_id = client.id;
    msg.sample_count = client.shard.size();
    msg.payload = apply_transform(cfg.transform, client.moment, g, client.rng());
    return msg;
}

// Unweighted mean over clients, summed in ascending client-id order.
inline GradientSet aggregate(std::vector<StandinMessage> messages) {
    if (messages.empty()) throw std::invalid_argument("aggregate: no messages");
    std::sort(messages.begin(), messages.end(),
              [](const StandinMessage& a, const StandinMessage& b) {
                  return a.client_id < b.client_id;
              });
    for (const auto& m : messages) {
        if (m.sample_count != messages.front().sample_count)
            throw std::invalid_argument("aggregate: unequal shard sizes");
        require_congruent(m.payload, messages.front().payload, "aggregate");
    }
    GradientSet acc = messages.front().payload;
    for (std::size_t k = 1; k < messages.size(); ++k)
        for_each_pair(acc, messages[k].payload, [](double& a, double p) { a += p; });
    const double inv = 1.0 / static_cast<double>(messages.size());
    for_each_entry(acc, [&](double& v) { v *= inv; });
    return acc;
}

inline Params apply_global_update(const Params& global, const GradientSet& agg,
                                  const RoundConfig& cfg) {
    require_congruent(global, agg, "apply_global_update");
    Params out = global;
    for_each_pair(out, agg, [&](double& p, double g) { p -= cfg.server_lr * g; });
    return out;
}

struct RoundRecord {
    int round = 0;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
    double payload_norm = 0.0;  // mean L2 norm of client payloads
};

struct RunHistory {
    std::vector<RoundRecord> rounds;
    Params final_params;
};

inline RunHistory run_federation(const MlpSpec& spec, Params global,
                                 std::vector<ClientState>& clients, const RoundConfig& cfg,
                                 int rounds, const Dataset& test_set) {
    if (rounds < 1) throw std::invalid_argument("run_federation: rounds must be >= 1");
    cfg.validate();
    RunHistory hist;
    hist.rounds.reserve(static_cast<std::size_t>(rounds));
    for (int r = 1; r <= rounds; ++r) {
        std::vector<StandinMessage> messages;
        messages.reserve(clients.size());
        double norm_sum = 0.0;
        for (auto& c : clients) {
            messages.push_back(local_round(c, global, spec, cfg));
            norm_sum += std::sqrt(squared_norm(messages.back().payload));
        }
        global = apply_global_update(global, aggregate(std::move(messages)), cfg);

        double train_loss = 0.0;
        std::size_t n = 0;
        for (const auto& c : clients) {
            for (const Sample& s : c.shard) {
                train_loss += loss_and_grad(spec, global, s.x, s.label).loss;
                ++n;
            }
        }
        RoundRecord rec;
        rec.round = r;
        rec.train_loss = train_loss / static_cast<double>(n);
        rec.test_accuracy = test_set.empty() ? 0.0 : accuracy(spec, global, test_set);
        rec.payload_norm = norm_sum / static_cast<double>(clients.size());
        hist.rounds.push_back(rec);
    }
    hist.final_params = std::move(global);
    return hist;
}

}  // namespace ada
