#include "adbench/features.hpp"

#include "adbench/error.hpp"

#include <charconv>

namespace adbench {

namespace {

constexpr std::string_view kWeekdayNames[kWeekdays] = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                                       "Friday", "Saturday", "Sunday"};

template <typename E>
void append_group(std::vector<std::string>& names, std::string_view prefix) {
    for (auto label : EnumLabels<E>::values) names.push_back(std::string(prefix) + "=" + std::string(label));
}

template <typename E>
std::size_t put_one_hot(std::array<double, kDemographicDims>& out, std::size_t offset, E value) {
    out[offset + static_cast<std::size_t>(value)] = 1.0;
    return offset + enum_size<E>();
}

struct RowRef {
    std::size_t user_pos;
    std::size_t product_pos;
};

std::vector<RowRef> rows_for(const CatalogIndex& catalog, const ModelBase& base) {
    std::vector<RowRef> rows;
    if (base.kind == BaseKind::ProductBased) {
        const auto p = catalog.product_pos(base.base_id);
        if (!p) throw ValidationError("unknown product base id " + base.base_id);
        rows.reserve(catalog.user_count());
        for (std::size_t u = 0; u < catalog.user_count(); ++u) rows.push_back({u, *p});
    } else {
        const auto u = catalog.user_pos(base.base_id);
        if (!u) throw ValidationError("unknown user base id " + base.base_id);
        if (catalog.advert_matched().empty()) throw ValidationError("user base needs advert-matched products");
        for (const auto& pid : catalog.advert_matched()) rows.push_back({*u, *catalog.product_pos(pid)});
    }
    return rows;
}

}  // namespace

std::string_view feature_set_code(FeatureSet s) {
    switch (s) {
        case FeatureSet::ViewWeekdaySlot: return "weekday_slot";
        case FeatureSet::ViewWeekday: return "weekday";
        case FeatureSet::Demographics: return "demographics";
        case FeatureSet::ViewWeekdaySlotPlusDemo: return "weekday_slot+demographics";
        case FeatureSet::ViewWeekdayPlusDemo: return "weekday+demographics";
    }
    return "?";
}

std::string_view feature_set_label(FeatureSet s) {
    switch (s) {
        case FeatureSet::ViewWeekdaySlot: return "Advert Viewing Weekday Time Slots";
        case FeatureSet::ViewWeekday: return "Advert Viewing Weekday Only";
        case FeatureSet::Demographics: return "Demographics";
        case FeatureSet::ViewWeekdaySlotPlusDemo: return "Advert Viewing Weekday Time Slots and Demographics";
        case FeatureSet::ViewWeekdayPlusDemo: return "Advert Viewing Weekday Only and Demographics";
    }
    return "?";
}

std::optional<FeatureSet> feature_set_from_code(std::string_view code) {
    for (auto s : kAllFeatureSets) {
        if (feature_set_code(s) == code) return s;
    }
    return std::nullopt;
}

std::size_t feature_dims(const InputConfig& config) {
    std::size_t d = 0;
    if (has_viewing(config.features)) d += has_slots(config.features) ? kExposureCells : kWeekdays;
    if (has_demographics(config.features)) d += kDemographicDims;
    return d + (config.include_pi_feature ? 1 : 0);
}

std::string_view base_kind_code(BaseKind k) { return k == BaseKind::ProductBased ? "product" : "user"; }

std::optional<BaseKind> base_kind_from_code(std::string_view code) {
    if (code == "product") return BaseKind::ProductBased;
    if (code == "user") return BaseKind::UserBased;
    return std::nullopt;
}

std::array<double, kDemographicDims> encode_demographics(const DemographicProfile& p) {
    std::array<double, kDemographicDims> out{};
    std::size_t offset = 0;
    offset = put_one_hot(out, offset, p.age);
    offset = put_one_hot(out, offset, p.sex);
    offset = put_one_hot(out, offset, p.marital);
    offset = put_one_hot(out, offset, p.parental);
    put_one_hot(out, offset, p.income);
    return out;
}

std::vector<std::string> demographic_feature_names() {
    std::vector<std::string> names;
    append_group<AgeBracket>(names, "age");
    append_group<Sex>(names, "sex");
    append_group<MaritalStatus>(names, "marital_status");
    append_group<ParentalStatus>(names, "parental_status");
    append_group<IncomeBracket>(names, "income");
    return names;
}

FeatureMatrix build_matrix(const CatalogIndex& catalog, const ExposureMatrix& exposure, const ModelBase& base,
                           const InputConfig& config, Behavior target_behavior) {
    if (config.include_pi_feature && target_behavior == Behavior::PurchaseIntention) {
        throw ValidationError("PI feature requested while predicting purchase intention");
    }
    if (config.include_pi_feature && !has_demographics(config.features)) {
        throw ValidationError("PI feature requires a demographic input configuration");
    }
    const auto rows = rows_for(catalog, base);

    FeatureMatrix m;
    m.rows = rows.size();
    m.dims = feature_dims(config);
    m.values.assign(m.rows * m.dims, 0.0);
    m.row_keys.reserve(m.rows);

    const bool viewing = has_viewing(config.features);
    const bool slots = has_slots(config.features);
    if (viewing) {
        for (int w = 0; w < kWeekdays; ++w) {
            if (slots) {
                m.feature_names.push_back(std::string(kWeekdayNames[w]) + " Primetime");
                m.feature_names.push_back(std::string(kWeekdayNames[w]) + " Non-Primetime");
            } else {
                m.feature_names.emplace_back(kWeekdayNames[w]);
            }
        }
    }
    if (has_demographics(config.features)) {
        for (auto& n : demographic_feature_names()) m.feature_names.push_back(std::move(n));
    }
    if (config.include_pi_feature) m.feature_names.emplace_back("pi_jan");

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& user = catalog.user(rows[r].user_pos);
        const auto& product = catalog.product(rows[r].product_pos);
        m.row_keys.emplace_back(user.user_id, product);
        double* out = m.values.data() + r * m.dims;
        std::size_t col = 0;
        if (viewing) {
            const auto& cells = exposure.cells(user.user_id, product);
            if (slots) {
                for (int c = 0; c < kExposureCells; ++c) out[col++] = static_cast<double>(cells[c]);
            } else {
                for (int w = 0; w < kWeekdays; ++w) {
                    out[col++] = static_cast<double>(cells[cell_index(w, TimeSlot::Primetime)] +
                                                     cells[cell_index(w, TimeSlot::NonPrimetime)]);
                }
            }
        }
        if (has_demographics(config.features)) {
            for (double v : encode_demographics(user)) out[col++] = v;
        }
        if (config.include_pi_feature) {
            out[col++] = catalog.response(rows[r].user_pos, rows[r].product_pos).pi_jan ? 1.0 : 0.0;
        }
    }
    return m;
}

std::vector<SurveyResponse> base_responses(const CatalogIndex& catalog, const ModelBase& base) {
    std::vector<SurveyResponse> out;
    for (const auto& r : rows_for(catalog, base)) out.push_back(catalog.response(r.user_pos, r.product_pos));
    return out;
}

std::string format_matrix_table(const FeatureMatrix& m) {
    std::string out = "user_id\tproduct_id";
    for (const auto& n : m.feature_names) out.append("\t").append(n);
    out.push_back('\n');
    char buf[64];
    for (std::size_t r = 0; r < m.rows; ++r) {
        out.append(m.row_keys[r].first).append("\t").append(m.row_keys[r].second);
        for (double v : m.row(r)) {
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            out.append("\t").append(buf, res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace adbench
