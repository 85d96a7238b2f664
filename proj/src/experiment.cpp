#include "adbench/experiment.hpp"

#include "adbench/error.hpp"

#include <charconv>
#include <cmath>

namespace adbench {

const std::string_view kResultsHeader =
    "identity\tmodel\tbase_kind\tbase_id\tfeatures\tpi_toggle\tpi_feature\tbehavior\tcategory\tk\tseed\t"
    "mean_precision\tmean_recall\tmean_f1\tfolds";
const std::string_view kFailuresHeader =
    "identity\tmodel\tbase_kind\tbase_id\tfeatures\tpi_toggle\tpi_feature\tbehavior\tcategory\tk\tseed\treason";

std::string ExperimentSpec::identity() const {
    std::string id;
    id.reserve(64);
    id.append(learner_code(model)).append("|").append(base_kind_code(base.kind)).append("|").append(base.base_id);
    id.append("|").append(feature_set_code(features)).append(pi_toggle ? "|pi1|" : "|pi0|");
    id.append(behavior_code(behavior)).append("|c").append(std::to_string(category));
    id.append("|k").append(std::to_string(k));
    return id;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, r.ptr};
}

namespace {

void append_spec_columns(std::string& out, const ExperimentSpec& s) {
    out.append(s.identity()).append("\t");
    out.append(learner_code(s.model)).append("\t").append(base_kind_code(s.base.kind)).append("\t");
    out.append(s.base.base_id).append("\t").append(feature_set_code(s.features)).append("\t");
    out.append(s.pi_toggle ? "1" : "0").append("\t").append(s.pi_feature_effective() ? "1" : "0").append("\t");
    out.append(behavior_code(s.behavior)).append("\t").append(std::to_string(s.category)).append("\t");
    out.append(std::to_string(s.k)).append("\t").append(std::to_string(s.seed));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto at = line.find(sep, pos);
        if (at == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, at - pos));
        pos = at + 1;
    }
}

template <typename T>
T number(std::string_view s, const std::string& file, std::size_t line, const char* what) {
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(file, line, std::string("bad ") + what + " \"" + std::string(s) + "\"");
    }
    return v;
}

double real(std::string_view s, const std::string& file, std::size_t line, const char* what) {
    if (s == "nan") return std::nan("");
    return number<double>(s, file, line, what);
}

ExperimentSpec parse_spec_columns(const std::vector<std::string_view>& f, const std::string& file, std::size_t line) {
    ExperimentSpec s;
    auto fail = [&](const std::string& what) { throw ParseError(file, line, what); };
    const auto model = learner_from_code(f[1]);
    if (!model) fail("unknown model " + std::string(f[1]));
    s.model = *model;
    const auto kind = base_kind_from_code(f[2]);
    if (!kind) fail("unknown base kind " + std::string(f[2]));
    s.base = {*kind, std::string(f[3])};
    const auto features = feature_set_from_code(f[4]);
    if (!features) fail("unknown features " + std::string(f[4]));
    s.features = *features;
    if (f[5] != "0" && f[5] != "1") fail("pi_toggle must be 0 or 1");
    s.pi_toggle = f[5] == "1";
    const auto behavior = behavior_from_code(f[7]);
    if (!behavior) fail("unknown behavior " + std::string(f[7]));
    s.behavior = *behavior;
    s.category = number<int>(f[8], file, line, "category");
    if (s.category < 0 || s.category >= kCategories) fail("category out of range");
    s.k = number<int>(f[9], file, line, "k");
    s.seed = number<std::uint64_t>(f[10], file, line, "seed");
    if ((f[6] == "1") != s.pi_feature_effective()) fail("pi_feature column inconsistent with spec");
    if (s.identity() != f[0]) fail("identity column does not match spec columns");
    return s;
}

}  // namespace

std::string format_result_row(const ScoreRecord& r) {
    std::string out;
    append_spec_columns(out, r.spec);
    out.append("\t").append(format_double(r.cv.mean_precision));
    out.append("\t").append(format_double(r.cv.mean_recall));
    out.append("\t").append(format_double(r.cv.mean_f1)).append("\t");
    for (std::size_t i = 0; i < r.cv.folds.size(); ++i) {
        const auto& c = r.cv.folds[i].confusion;
        if (i) out.push_back(';');
        out.append(std::to_string(c.tp)).append("/").append(std::to_string(c.fp)).append("/");
        out.append(std::to_string(c.tn)).append("/").append(std::to_string(c.fn));
    }
    return out;
}

std::string format_failure_row(const FailureRecord& r) {
    std::string out;
    append_spec_columns(out, r.spec);
    std::string reason = r.reason;
    for (char& ch : reason) {
        if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    }
    out.append("\t").append(reason);
    return out;
}

ScoreRecord parse_result_row(std::string_view line, const std::string& file, std::size_t line_no) {
    const auto f = split(line, '\t');
    if (f.size() != 15) throw ParseError(file, line_no, "expected 15 fields, got " + std::to_string(f.size()));
    ScoreRecord r;
    r.spec = parse_spec_columns(f, file, line_no);
    r.cv.mean_precision = real(f[11], file, line_no, "mean_precision");
    r.cv.mean_recall = real(f[12], file, line_no, "mean_recall");
    r.cv.mean_f1 = real(f[13], file, line_no, "mean_f1");
    int index = 0;
    for (auto fold : split(f[14], ';')) {
        const auto parts = split(fold, '/');
        if (parts.size() != 4) throw ParseError(file, line_no, "bad fold entry \"" + std::string(fold) + "\"");
        FoldResult fr;
        fr.fold_index = index++;
        fr.confusion.tp = number<std::size_t>(parts[0], file, line_no, "tp");
        fr.confusion.fp = number<std::size_t>(parts[1], file, line_no, "fp");
        fr.confusion.tn = number<std::size_t>(parts[2], file, line_no, "tn");
        fr.confusion.fn = number<std::size_t>(parts[3], file, line_no, "fn");
        fr.scores = metrics(fr.confusion);
        r.cv.folds.push_back(fr);
    }
    if (static_cast<int>(r.cv.folds.size()) != r.spec.k) throw ParseError(file, line_no, "fold count differs from k");
    return r;
}

FailureRecord parse_failure_row(std::string_view line, const std::string& file, std::size_t line_no) {
    const auto f = split(line, '\t');
    if (f.size() != 12) throw ParseError(file, line_no, "expected 12 fields, got " + std::to_string(f.size()));
    return {parse_spec_columns(f, file, line_no), std::string(f[11])};
}

}  // namespace adbench
