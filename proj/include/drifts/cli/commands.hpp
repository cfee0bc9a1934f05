#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "drifts/cli/config.hpp"
#include "drifts/synthgen.hpp"

namespace drifts::cli {

struct SubjectFiles {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path labels;
};

/// Pairs `<id><image_suffix>.nii[.gz]` with `<id><label_suffix>.nii[.gz]`,
/// sorted by id. Images without a label partner are skipped.
std::vector<SubjectFiles> discover_subjects(const std::filesystem::path& dir,
                                            const InputConfig& input);

/// Reads a pair, remaps Draw-EM labels and applies the optional resample +
/// crop/pad preprocessing.
Subject load_subject(const SubjectFiles& files, const InputConfig& input);

/// "<subject>_s<index:06>_seed<seed>"
std::string sample_stem(const std::string& subject, std::uint64_t index, std::uint64_t seed);

/// Generates `count` samples round-robin over `subjects` with `workers`
/// threads and writes image, labels and provenance sidecar per sample.
/// Returns the written stems in index order.
std::vector<std::string> run_generation(const std::vector<Subject>& subjects,
                                        const std::vector<SubjectFiles>& files,
                                        const RunConfig& cfg,
                                        const std::filesystem::path& out_dir);

struct BenchResult {
  GeneratorMode mode = GeneratorMode::FetalSynthSeg;
  std::vector<StageTimings> runs;

  double median_total() const;
  double p95_total() const;
};

/// Times `samples` sequential generations (indices 0..samples-1) of one
/// subject.
BenchResult run_bench(const Subject& subject, const GenerationConfig& cfg, int samples);

/// Entry point; returns the process exit code. Errors print one line
/// `error: code=<Code> message="<text>"` on `err`.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace drifts::cli
