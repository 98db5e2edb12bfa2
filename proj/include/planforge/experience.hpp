#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace planforge {

// One verified execution: the plan's feature vector and what it actually cost.
struct Experience {
    std::string fingerprint; // query template identity
    Eigen::VectorXd features;
    double measured = 0.0; // measured_cost, full data or sampled
    bool sampled = false;

    void validate() const; // measured >= 0, finite features
};

// Append-only collection of experiences, optionally mirrored to a CSV file
// (header: fingerprint,f0..f{F-1},measured,sampled). Every row must carry the
// same feature width.
class ExperienceStore {
  public:
    ExperienceStore() = default;
    // binds the store to a CSV file; existing rows are loaded, appends are
    // written through
    explicit ExperienceStore(const std::filesystem::path &csv_path);

    void add(const Experience &e);
    const std::vector<Experience> &all() const { return rows_; }
    size_t size() const { return rows_.size(); }

  private:
    std::vector<Experience> rows_;
    std::filesystem::path path_; // empty = memory only
};

} // namespace planforge
