#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "knock/pipeline.hpp"
#include "knock/report.hpp"
#include "knock/train.hpp"
#include "oracles.hpp"

using namespace knock;
using Catch::Approx;

namespace {

Manifest fake_manifest(std::size_t n0, std::size_t n1, std::size_t n2) {
    Manifest m;
    std::size_t id = 0;
    const std::size_t counts[3] = {n0, n1, n2};
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < counts[c]; ++i) {
            m.add({"clip_" + std::to_string(id) + ".wav", static_cast<Maturity>(c),
                   Provenance::synthetic, "clip_" + std::to_string(id)});
            ++id;
        }
    return m;
}

Dataset toy_dataset(std::size_t per_class, std::size_t rows, std::size_t cols,
                    std::uint64_t seed, double separation) {
    Rng rng(seed);
    Dataset ds;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            FeatureTensor t;
            t.rows = rows;
            t.cols = cols;
            t.data.resize(rows * cols);
            for (std::size_t j = 0; j < t.data.size(); ++j)
                t.data[j] = rng.normal() + (j % 3 == static_cast<std::size_t>(c)
                                                ? separation
                                                : 0.0);
            ds.features.push_back(std::move(t));
            ds.labels.push_back(c);
        }
    return ds;
}

} // namespace

TEST_CASE("stratified 90/10 split arithmetic", "[pipeline][split]") {
    const Manifest m = fake_manifest(4050, 4050, 5850);
    SplitConfig cfg;
    cfg.seed = 3;
    auto [train_idx, test_idx] = split_train_test_indices(m, cfg);
    CHECK(train_idx.size() == 12555);
    CHECK(test_idx.size() == 1395);

    std::array<std::size_t, 3> test_counts{0, 0, 0};
    for (auto i : test_idx) test_counts[static_cast<int>(m[i].label)]++;
    CHECK(test_counts[0] == 405);
    CHECK(test_counts[1] == 405);
    CHECK(test_counts[2] == 585);

    SECTION("deterministic, disjoint and exhaustive") {
        auto [train2, test2] = split_train_test_indices(m, cfg);
        CHECK(train2 == train_idx);
        CHECK(test2 == test_idx);

        std::set<std::size_t> all(train_idx.begin(), train_idx.end());
        for (auto i : test_idx) CHECK(all.insert(i).second); // no overlap
        CHECK(all.size() == m.size());
    }

    SECTION("different seeds differ") {
        SplitConfig other = cfg;
        other.seed = 4;
        auto [t2, e2] = split_train_test_indices(m, other);
        CHECK(e2 != test_idx);
    }

    SECTION("empty class rejected") {
        const Manifest bad = fake_manifest(5, 0, 5);
        CHECK_THROWS_AS(split_train_test_indices(bad, cfg), ArgumentError);
    }
}

TEST_CASE("stratified k-fold partitioning", "[pipeline][kfold]") {
    const Manifest m = fake_manifest(30, 30, 40);
    SplitConfig cfg;
    cfg.k_folds = 5;
    cfg.seed = 9;
    const auto folds = kfold_split_indices(m, cfg);
    REQUIRE(folds.size() == 5);

    std::set<std::size_t> seen;
    for (const auto& [train, val] : folds) {
        CHECK(val.size() == 20);
        CHECK(train.size() == 80);
        for (auto i : val) CHECK(seen.insert(i).second); // exactly one fold each
        // stratification: per-fold class ratios within one clip of global
        std::array<std::size_t, 3> counts{0, 0, 0};
        for (auto i : val) counts[static_cast<int>(m[i].label)]++;
        CHECK(counts[0] == 6);
        CHECK(counts[1] == 6);
        CHECK(counts[2] == 8);
    }
    CHECK(seen.size() == m.size());

    SECTION("k larger than the smallest class is rejected") {
        const Manifest small = fake_manifest(4, 30, 30);
        CHECK_THROWS_AS(kfold_split_indices(small, cfg), ArgumentError);
    }
}

TEST_CASE("confusion matrix tallies", "[pipeline][metrics]") {
    SECTION("all correct is diagonal") {
        const auto cm = confusion({{0, 0}, {1, 1}, {2, 2}, {1, 1}});
        CHECK(cm.trace() == 4);
        CHECK(cm.total() == 4);
    }
    SECTION("single off-diagonal pair") {
        const auto cm = confusion({{0, 1}});
        CHECK(cm.counts[0][1] == 1);
        CHECK(cm.total() == 1);
    }
    SECTION("random pairs match a direct tally") {
        Rng rng(17);
        std::vector<std::pair<int, int>> pairs(1000);
        long tally[3][3] = {};
        for (auto& [t, p] : pairs) {
            t = static_cast<int>(rng.uniform_int(0, 2));
            p = static_cast<int>(rng.uniform_int(0, 2));
            tally[t][p]++;
        }
        const auto cm = confusion(pairs);
        for (int t = 0; t < 3; ++t)
            for (int p = 0; p < 3; ++p) CHECK(cm.counts[t][p] == tally[t][p]);
    }
    SECTION("out-of-range labels rejected") {
        CHECK_THROWS_AS(confusion({{0, 3}}), ArgumentError);
    }
}

TEST_CASE("metrics formulas", "[pipeline][metrics]") {
    SECTION("perfect predictions give all 100s") {
        ConfusionMatrix cm;
        cm.counts = {{{10, 0, 0}, {0, 20, 0}, {0, 0, 30}}};
        const MetricsReport rep = metrics(cm);
        CHECK(rep.accuracy == Approx(100.0));
        CHECK(rep.precision_macro == Approx(100.0));
        CHECK(rep.recall_macro == Approx(100.0));
        CHECK(rep.f1_macro == Approx(100.0));
    }

    SECTION("hand-computed example") {
        ConfusionMatrix cm;
        cm.counts = {{{8, 2, 0}, {1, 9, 0}, {0, 0, 10}}};
        const MetricsReport rep = metrics(cm);
        CHECK(rep.accuracy == Approx(90.0));
        CHECK(rep.per_class[0].precision == Approx(100.0 * 8.0 / 9.0));
        CHECK(rep.per_class[0].recall == Approx(80.0));
        CHECK(rep.per_class[0].f1 == Approx(100.0 * 16.0 / 19.0).margin(1e-9));
    }

    SECTION("single-class predictions flag degenerate columns") {
        ConfusionMatrix cm;
        cm.counts = {{{10, 0, 0}, {5, 0, 0}, {5, 0, 0}}};
        const MetricsReport rep = metrics(cm);
        CHECK(rep.per_class[1].degenerate);
        CHECK(rep.per_class[1].precision == 0.0);
        CHECK(rep.per_class[2].degenerate);
    }

    SECTION("accuracy equals support-weighted recall on random matrices") {
        Rng rng(23);
        for (int trial = 0; trial < 20; ++trial) {
            ConfusionMatrix cm;
            long total = 0;
            for (int t = 0; t < 3; ++t)
                for (int p = 0; p < 3; ++p) {
                    cm.counts[t][p] = rng.uniform_int(0, 40);
                    total += cm.counts[t][p];
                }
            if (total == 0) continue;
            const MetricsReport rep = metrics(cm);
            double weighted_recall = 0.0;
            for (int c = 0; c < 3; ++c)
                weighted_recall += rep.per_class[c].recall *
                                   static_cast<double>(rep.per_class[c].support);
            weighted_recall /= static_cast<double>(total);
            REQUIRE(rep.accuracy == Approx(weighted_recall).margin(1e-9));

            for (int c = 0; c < 3; ++c) {
                const auto& m = rep.per_class[c];
                if (m.degenerate) continue;
                REQUIRE(m.f1 >= std::min(m.precision, m.recall) - 1e-9);
                REQUIRE(m.f1 <= std::max(m.precision, m.recall) + 1e-9);
            }
        }
    }

    SECTION("empty matrix rejected") {
        ConfusionMatrix cm;
        CHECK_THROWS_AS(metrics(cm), ArgumentError);
    }
}

TEST_CASE("compare_models Welch t-test", "[pipeline][compare]") {
    SECTION("identical vectors give exactly 1") {
        const std::vector<double> v{97.42, 97.28, 97.32, 97.22};
        CHECK(compare_models(v, v) == 1.0);
    }
    SECTION("published RNN vs LSTM indicators: no significant difference") {
        const std::vector<double> rnn{97.42, 97.28, 97.32, 97.22};
        const std::vector<double> lstm{97.42, 97.23, 97.32, 97.20};
        const double p = compare_models(rnn, lstm);
        CHECK(p > 0.05);
        CHECK(p == Approx(0.7969555625740509).epsilon(1e-9)); // scipy Welch oracle
    }
    SECTION("deep-learning group vs reference ML group: significant") {
        const std::vector<double> dl{97.42, 97.22, 97.42, 97.20};
        const std::vector<double> ml{81.74, 79.27, 83.48, 81.35, 80.00, 76.67};
        const double p = compare_models(dl, ml);
        CHECK(p < 0.05);
        CHECK(p == Approx(1.0150749814675933e-05).epsilon(1e-6)); // scipy Welch oracle
    }
    SECTION("zero variance short-circuits") {
        CHECK(compare_models({5.0, 5.0}, {5.0, 5.0}) == 1.0);
        CHECK(compare_models({5.0, 5.0}, {6.0, 6.0}) == 0.0);
    }
    SECTION("fewer than 2 indicators rejected") {
        CHECK_THROWS_AS(compare_models({1.0}, {1.0, 2.0}), ArgumentError);
    }
}

TEST_CASE("outlier_filter z-score screening", "[pipeline][outlier]") {
    auto tensor_with_norm = [](double norm) {
        FeatureTensor t;
        t.rows = 1;
        t.cols = 1;
        t.data = {norm};
        return t;
    };

    SECTION("identical clips: zero variance, none dropped") {
        std::vector<FeatureTensor> feats(10, tensor_with_norm(5.0));
        std::vector<int> labels(10, 0);
        CHECK(outlier_filter(feats, labels).size() == 10);
    }

    SECTION("one wildly scaled clip among 50 normals is dropped") {
        std::vector<FeatureTensor> feats;
        std::vector<int> labels;
        Rng rng(31);
        for (int i = 0; i < 50; ++i) {
            feats.push_back(tensor_with_norm(1.0 + 0.01 * rng.normal()));
            labels.push_back(1);
        }
        feats.push_back(tensor_with_norm(100.0));
        labels.push_back(1);
        const auto retained = outlier_filter(feats, labels);
        CHECK(retained.size() == 50);
        for (auto i : retained) CHECK(i != 50);
    }

    SECTION("moderate spread stays under the threshold") {
        std::vector<FeatureTensor> feats;
        std::vector<int> labels;
        for (int i = 0; i < 50; ++i) {
            feats.push_back(tensor_with_norm(1.0 + 0.02 * i));
            labels.push_back(2);
        }
        // a linear ramp has max |z| ~ 1.7, well inside the threshold
        CHECK(outlier_filter(feats, labels).size() == 50);
    }

    SECTION("tiny classes are passed through") {
        std::vector<FeatureTensor> feats{tensor_with_norm(1.0), tensor_with_norm(100.0)};
        std::vector<int> labels{0, 0};
        CHECK(outlier_filter(feats, labels).size() == 2);
    }
}

TEST_CASE("training overfits a toy set deterministically", "[pipeline][train]") {
    nn::ModelConfig cfg;
    cfg.in_channels = 8;
    cfg.conv1_out = 4;
    cfg.conv2_out = 6;
    cfg.hidden = 6;
    cfg.frames = 4;
    cfg.batch_size = 2;
    cfg.epochs = 60;

    const Dataset ds = toy_dataset(1, 8, 4, 5, 2.0); // 3 clips, one per class
    const TrainResult r1 = train(ds, ds, cfg, 7);
    REQUIRE(r1.log.size() == 60);
    CHECK(r1.log.back().train_loss < r1.log.front().train_loss);
    CHECK(r1.best_epoch >= 1);

    const TrainResult r2 = train(ds, ds, cfg, 7);
    for (std::size_t i = 0; i < 60; ++i) {
        REQUIRE(r1.log[i].train_loss == r2.log[i].train_loss); // bit-identical
        REQUIRE(r1.log[i].val_loss == r2.log[i].val_loss);
    }

    SECTION("empty training set rejected") {
        CHECK_THROWS_AS(train(Dataset{}, ds, cfg, 1), ArgumentError);
    }
}

TEST_CASE("predict is deterministic and uses argmax", "[pipeline][predict]") {
    nn::ModelConfig cfg;
    cfg.in_channels = 8;
    cfg.conv1_out = 4;
    cfg.conv2_out = 6;
    cfg.hidden = 6;
    cfg.frames = 4;
    cfg.batch_size = 4;
    cfg.epochs = 3;

    const Dataset ds = toy_dataset(4, 8, 4, 6, 2.0);
    const TrainResult res = train(ds, ds, cfg, 3);
    nn::Model model = model_from_checkpoint(res.checkpoint, "best");
    const auto p1 = predict(model, ds);
    const auto p2 = predict(model, ds);
    CHECK(p1 == p2);
    REQUIRE(p1.size() == ds.size());
    for (const auto& [t, p] : p1) {
        CHECK(t >= 0);
        CHECK(t <= 2);
        CHECK(p >= 0);
        CHECK(p <= 2);
    }
}

TEST_CASE("baseline_linear sanity runs", "[pipeline][baseline]") {
    SECTION("separable blobs reach 100% test accuracy") {
        // small-data run: batch 16 over 400 epochs gives the optimizer
        // enough steps at the fixed 0.001 rate
        const Dataset train_ds = toy_dataset(30, 6, 4, 8, 4.0);
        const Dataset test_ds = toy_dataset(10, 6, 4, 9, 4.0);
        const auto [train_acc, test_acc] = baseline_linear(train_ds, test_ds, 1, 400, 16);
        CHECK(train_acc == Approx(100.0));
        CHECK(test_acc == Approx(100.0));
    }
    SECTION("label-shuffled data scores near chance") {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Dataset train_ds = toy_dataset(40, 6, 4, 10 + seed, 0.0); // no class signal
            Dataset test_ds = toy_dataset(15, 6, 4, 20 + seed, 0.0);
            const auto [train_acc, test_acc] = baseline_linear(train_ds, test_ds, seed);
            total += test_acc;
        }
        const double mean = total / 5.0;
        CHECK(mean >= 23.0);
        CHECK(mean <= 43.0);
    }
}

TEST_CASE("report serialization round trip", "[pipeline][report]") {
    oracle::TempDir dir("report");
    ConfusionMatrix cm;
    cm.counts = {{{8, 2, 0}, {1, 9, 0}, {0, 0, 10}}};
    const MetricsReport rep = metrics(cm);
    write_json(dir.file("m.json"), metrics_to_json(rep));

    const auto j = read_json(dir.file("m.json"));
    CHECK(j.at("version") == 1);
    CHECK(j.at("accuracy").get<double>() == Approx(90.0));
    CHECK(j.at("per_class").size() == 3);
    CHECK(j.at("confusion")[0][1].get<long>() == 2);

    const MetricsReport back = metrics_from_json(j);
    CHECK(back.accuracy == Approx(rep.accuracy));
    CHECK(back.f1_macro == Approx(rep.f1_macro));

    SECTION("trainlog csv format") {
        write_trainlog_csv(dir.file("log.csv"), {{1, 0.5, 0.6}, {2, 0.4, 0.5}});
        std::ifstream in(dir.file("log.csv"));
        std::string header;
        std::getline(in, header);
        CHECK(header == "epoch,train_loss,val_loss");
        std::string row;
        std::getline(in, row);
        CHECK(row.substr(0, 2) == "1,");
    }
}
