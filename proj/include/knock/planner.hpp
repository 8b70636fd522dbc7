#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "knock/augment.hpp"
#include "knock/manifest.hpp"
#include "knock/parallel.hpp"
#include "knock/rng.hpp"
#include "knock/wav.hpp"

namespace knock {

/// How plan_and_augment grows each class.
struct AugmentPlan {
    std::array<std::size_t, 3> targets{};
    /// Fraction of generated clips produced by audiomentation; the rest use
    /// the procedural time-varying low-pass.
    double audiomentation_ratio = 0.5;
};

/**
 * Grow the dataset to the per-class targets by cycling over each class's
 * source clips, writing one WAV per generated clip into out_dir. Clip j of
 * source s is named `<source_id>_aug<j>.wav`. Generation order and content
 * depend only on (manifest, plan, seed); clips are produced in parallel
 * with per-clip substreams.
 *
 * Returns the merged manifest (paths of new entries are relative to
 * out_dir when out_dir equals the returned manifest's save location).
 */
inline Manifest plan_and_augment(const Manifest& manifest, const AugmentPlan& plan,
                                 std::uint64_t seed, const std::string& out_dir) {
    const auto counts = manifest.class_counts();
    for (int c = 0; c < 3; ++c)
        if (plan.targets[c] < counts[c])
            throw ArgumentError("augment target for class " + std::to_string(c) +
                                " (" + std::to_string(plan.targets[c]) +
                                ") is below the current count " +
                                std::to_string(counts[c]));

    // indices of source clips per class, in manifest order
    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < manifest.size(); ++i)
        by_class[static_cast<int>(manifest[i].label)].push_back(i);

    struct Job {
        std::size_t source_index;
        std::size_t per_source_counter;
        std::size_t job_index;
    };
    std::vector<Job> jobs;
    std::map<std::size_t, std::size_t> per_source_count;
    for (int c = 0; c < 3; ++c) {
        const std::size_t need = plan.targets[c] - counts[c];
        for (std::size_t k = 0; k < need; ++k) {
            const std::size_t src = by_class[c][k % by_class[c].size()];
            jobs.push_back({src, per_source_count[src]++, jobs.size()});
        }
    }

    if (!jobs.empty()) std::filesystem::create_directories(out_dir);

    // cache decoded sources (each may be reused many times)
    std::map<std::size_t, LabeledClip> sources;
    for (const auto& j : jobs) {
        if (sources.count(j.source_index)) continue;
        const auto& e = manifest[j.source_index];
        LabeledClip clip;
        clip.signal = read_wav(manifest.resolve(e));
        clip.label = e.label;
        clip.provenance = e.provenance;
        clip.source_id = e.source_id;
        sources.emplace(j.source_index, std::move(clip));
    }

    const Rng master(seed);
    std::vector<ManifestEntry> generated(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& job = jobs[i];
        const auto& src = sources.at(job.source_index);
        Rng rng = master.split(job.job_index);
        const bool use_audiomentation = rng.uniform01() < plan.audiomentation_ratio;
        const LabeledClip out_clip =
            use_audiomentation ? augment_clip(src, rng) : procedural_clip(src, rng);

        const std::string name =
            src.source_id + "_aug" + std::to_string(job.per_source_counter) + ".wav";
        write_wav(out_clip.signal, (std::filesystem::path(out_dir) / name).string());

        ManifestEntry e;
        e.path = name;
        e.label = out_clip.label;
        e.provenance = Provenance::augmented;
        e.source_id = src.source_id;
        generated[i] = std::move(e);
    });

    Manifest merged;
    for (const auto& e : manifest.entries()) {
        ManifestEntry copy = e;
        // pin pre-existing entries so the merged manifest works from out_dir
        copy.path = std::filesystem::absolute(manifest.resolve(e)).string();
        merged.add(std::move(copy));
    }
    for (auto& e : generated)
        merged.add(std::move(e));
    return merged;
}

} // namespace knock
