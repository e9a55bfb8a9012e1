#include "mirsel/fetch.hpp"

#include "mirsel/dataset.hpp"
#include "mirsel/error.hpp"
#include "mirsel/serialize.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace mirsel {

namespace {

constexpr std::size_t kSamples = 215;
constexpr std::size_t kTrain = 172;
constexpr std::size_t kChannels = 100;
constexpr std::size_t kRecord = 125;
constexpr std::size_t kFatField = 123;

bool numeric_line(const std::string& line, std::vector<double>& out) {
    std::istringstream in(line);
    std::string tok;
    std::vector<double> vals;
    while (in >> tok) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size()) return false;
        vals.push_back(v);
    }
    out.insert(out.end(), vals.begin(), vals.end());
    return true;
}

}  // namespace

std::vector<std::vector<double>> parse_tecator_archive(const std::string& text) {
    std::vector<double> numbers;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<double> vals;
        if (numeric_line(line, vals)) numbers.insert(numbers.end(), vals.begin(), vals.end());
        else numbers.clear();
    }
    if (numbers.size() < kSamples * kRecord) {
        throw DataError("unexpected Tecator archive layout: found " + std::to_string(numbers.size()) +
                        " trailing numbers, need " + std::to_string(kSamples * kRecord));
    }
    const std::size_t start = numbers.size() - kSamples * kRecord;
    std::vector<std::vector<double>> rows(kSamples);
    for (std::size_t i = 0; i < kSamples; ++i) {
        const double* rec = numbers.data() + start + i * kRecord;
        rows[i].assign(rec, rec + kChannels);
        rows[i].push_back(rec[kFatField]);
    }
    return rows;
}

void write_tecator(const std::filesystem::path& dir, const std::vector<std::vector<double>>& rows) {
    if (rows.size() != kSamples) throw DataError("expected 215 Tecator records");
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "tecator.csv");
        if (!out) throw DataError("cannot write " + (dir / "tecator.csv").string());
        for (std::size_t j = 0; j < kChannels; ++j) out << 850 + 2 * j << "nm,";
        out << "fat\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (const auto& r : rows) {
            if (r.size() != kChannels + 1) throw DataError("Tecator record has the wrong length");
            for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << r[j];
            out << '\n';
        }
    }
    SplitSpec split;
    split.train.resize(kTrain);
    std::iota(split.train.begin(), split.train.end(), 0);
    split.test.resize(kSamples - kTrain);
    std::iota(split.test.begin(), split.test.end(), kTrain);
    save_split_json(dir / "tecator_split.json", split);
    write_json(dir / "tecator.json", Json{{"name", "tecator"},
                                         {"csv", "tecator.csv"},
                                         {"target", "fat"},
                                         {"split", "tecator_split.json"},
                                         {"preprocess", "spectrum-normalize"},
                                         {"folds", 4}});
}

}  // namespace mirsel
