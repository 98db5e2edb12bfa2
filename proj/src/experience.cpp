#include "planforge/experience.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "planforge/error.hpp"

namespace planforge {

void Experience::validate() const {
    if (!(measured >= 0.0) || !std::isfinite(measured))
        raise(errc::data, "experience has a negative or non-finite measured cost");
    if (!features.allFinite())
        raise(errc::data, "experience has non-finite features");
    if (fingerprint.empty())
        raise(errc::data, "experience is missing its query fingerprint");
}

ExperienceStore::ExperienceStore(const std::filesystem::path &csv_path) : path_(csv_path) {
    std::ifstream in(path_);
    if (!in)
        return; // fresh store; the file appears on first add
    std::string line;
    if (!std::getline(in, line))
        return;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() < 4)
            raise(errc::data, "experience row has too few columns");
        Experience e;
        e.fingerprint = cells.front();
        e.sampled = cells.back() == "1";
        e.measured = std::stod(cells[cells.size() - 2]);
        e.features.resize((Eigen::Index)cells.size() - 3);
        for (size_t i = 1; i + 2 < cells.size(); ++i)
            e.features[(Eigen::Index)i - 1] = std::stod(cells[i]);
        e.validate();
        if (!rows_.empty() && rows_.front().features.size() != e.features.size())
            raise(errc::data, "experience rows disagree on feature width");
        rows_.push_back(std::move(e));
    }
}

void ExperienceStore::add(const Experience &e) {
    e.validate();
    if (!rows_.empty() && rows_.front().features.size() != e.features.size())
        raise(errc::data, "experience rows disagree on feature width");
    rows_.push_back(e);
    if (path_.empty())
        return;
    const bool fresh = !std::filesystem::exists(path_);
    std::ofstream out(path_, std::ios::app);
    if (!out)
        raise(errc::data, "cannot append to experience file " + path_.string());
    if (fresh) {
        out << "fingerprint";
        for (Eigen::Index i = 0; i < e.features.size(); ++i)
            out << ",f" << i;
        out << ",measured,sampled\n";
    }
    out << e.fingerprint;
    char buf[32];
    for (Eigen::Index i = 0; i < e.features.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", e.features[i]);
        out << ',' << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", e.measured);
    out << ',' << buf << ',' << (e.sampled ? 1 : 0) << '\n';
}

} // namespace planforge
