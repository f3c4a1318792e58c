#include "catqkd/transcript_io.h"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace catqkd {

using nlohmann::json;

namespace {

std::string bits_to_string(std::span<const Bit> bits) {
    std::string s;
    s.reserve(bits.size());
    for (Bit b : bits) {
        s.push_back(b ? '1' : '0');
    }
    return s;
}

Outcome bits_from_string(const std::string& s) {
    Outcome out;
    out.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("bit string contains '" + std::string(1, c) + "'");
        }
        out.push_back(static_cast<Bit>(c - '0'));
    }
    return out;
}

std::string bases_to_string(std::span<const Basis> bases) {
    std::string s;
    s.reserve(bases.size());
    for (Basis b : bases) {
        s.push_back(b == Basis::X ? 'X' : 'Y');
    }
    return s;
}

BasisVector bases_from_string(const std::string& s) {
    BasisVector out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == 'X') {
            out.push_back(Basis::X);
        } else if (c == 'Y') {
            out.push_back(Basis::Y);
        } else {
            throw std::invalid_argument("basis string contains '" + std::string(1, c) + "'");
        }
    }
    return out;
}

json optional_state(const std::optional<CatState>& s) {
    if (!s) {
        return nullptr;
    }
    return json{{"state", s->label()}, {"arity", s->arity()}};
}

std::optional<CatState> optional_state_from(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return CatState::from_label(j.at("state").get<std::string>(), j.at("arity").get<std::size_t>());
}

json optional_bit(const std::optional<Bit>& b) {
    return b ? json(static_cast<int>(*b)) : json(nullptr);
}

std::optional<Bit> optional_bit_from(const json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return static_cast<Bit>(j.get<int>() & 1);
}

Protection parse_protection(const std::string& s) {
    for (Protection p : {Protection::Unprotected, Protection::SuppressError, Protection::ForceDiscard}) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw std::invalid_argument("unknown protection '" + s + "'");
}

json event_to_json(const AnnouncementEvent& e) {
    switch (e.kind) {
        case EventKind::BasisAnnouncement:
            return json{{"kind", "basis"}, {"group", to_string(e.group)}, {"member", e.member}};
        case EventKind::ParityReveal:
            return json{{"kind", "reveal"}, {"group", to_string(e.group)}};
        case EventKind::SourceAnnouncement:
            return json{{"kind", "source"}};
    }
    return nullptr;
}

AnnouncementEvent event_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    AnnouncementEvent e{EventKind::SourceAnnouncement};
    if (kind == "source") {
        return e;
    }
    e.group = j.at("group").get<std::string>() == "A" ? Group::A : Group::B;
    if (kind == "reveal") {
        e.kind = EventKind::ParityReveal;
    } else if (kind == "basis") {
        e.kind = EventKind::BasisAnnouncement;
        e.member = j.at("member").get<MemberId>();
    } else {
        throw std::invalid_argument("unknown event kind '" + kind + "'");
    }
    return e;
}

}  // namespace

std::string to_jsonl_line(const RoundTranscript& r) {
    json events = json::array();
    for (const auto& e : r.announcement_order) {
        events.push_back(event_to_json(e));
    }
    json j = {
        {"schema", kTranscriptSchema},
        {"round", r.round_index},
        {"variant", to_string(r.variant)},
        {"source", r.source.label()},
        {"n", r.source.arity()},
        {"collector_a", r.roles.collector_a},
        {"collector_b", r.roles.collector_b},
        {"last_a", r.roles.last_a},
        {"last_b", r.roles.last_b},
        {"chairperson", r.roles.chairperson ? json(*r.roles.chairperson) : json(nullptr)},
        {"bases_a", bases_to_string(r.bases_a)},
        {"bases_b", bases_to_string(r.bases_b)},
        {"measured_bases_a", bases_to_string(r.measured_bases_a)},
        {"measured_bases_b", bases_to_string(r.measured_bases_b)},
        {"outcomes_a", bits_to_string(r.outcomes_a)},
        {"outcomes_b", bits_to_string(r.outcomes_b)},
        {"measured_outcomes_a", bits_to_string(r.measured_outcomes_a)},
        {"measured_outcomes_b", bits_to_string(r.measured_outcomes_b)},
        {"n_y_a", r.stats_a.n_y_raw},
        {"n_y_b", r.stats_b.n_y_raw},
        {"parity_a", static_cast<int>(r.stats_a.parity)},
        {"parity_b", static_cast<int>(r.stats_b.parity)},
        {"mask_a", static_cast<int>(r.mask_r_a)},
        {"mask_b", static_cast<int>(r.mask_r_b)},
        {"hops_a", bits_to_string(r.hops_a)},
        {"hops_b", bits_to_string(r.hops_b)},
        {"shared_bit_a", static_cast<int>(r.shared_bit_a)},
        {"shared_bit_b", static_cast<int>(r.shared_bit_b)},
        {"kept", r.kept},
        {"test", r.selected_for_test},
        {"revealed_parity_a", optional_bit(r.revealed_parity_a)},
        {"revealed_parity_b", optional_bit(r.revealed_parity_b)},
        {"test_error", r.test_error},
        {"protection", to_string(r.protection)},
        {"eve_intercepted", r.eve.intercepted},
        {"eve_family", to_string(r.eve.measured_family)},
        {"eve_measured", optional_state(r.eve.measured_outcome)},
        {"eve_fake_sent", optional_state(r.eve.fake_sent)},
        {"eve_remainder", optional_state(r.eve.remainder)},
        {"events", events},
    };
    return j.dump();
}

RoundTranscript parse_jsonl_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("transcript line is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != kTranscriptSchema) {
            throw std::invalid_argument("unsupported transcript schema '" + j.at("schema").get<std::string>() + "'");
        }
        RoundTranscript r;
        r.round_index = j.at("round").get<std::size_t>();
        r.variant = parse_protocol_variant(j.at("variant").get<std::string>());
        r.source = CatState::from_label(j.at("source").get<std::string>(), j.at("n").get<std::size_t>());
        r.roles.collector_a = j.at("collector_a").get<MemberId>();
        r.roles.collector_b = j.at("collector_b").get<MemberId>();
        r.roles.last_a = j.at("last_a").get<MemberId>();
        r.roles.last_b = j.at("last_b").get<MemberId>();
        if (!j.at("chairperson").is_null()) {
            r.roles.chairperson = j.at("chairperson").get<MemberId>();
        }
        r.bases_a = bases_from_string(j.at("bases_a").get<std::string>());
        r.bases_b = bases_from_string(j.at("bases_b").get<std::string>());
        r.measured_bases_a = bases_from_string(j.at("measured_bases_a").get<std::string>());
        r.measured_bases_b = bases_from_string(j.at("measured_bases_b").get<std::string>());
        r.outcomes_a = bits_from_string(j.at("outcomes_a").get<std::string>());
        r.outcomes_b = bits_from_string(j.at("outcomes_b").get<std::string>());
        r.measured_outcomes_a = bits_from_string(j.at("measured_outcomes_a").get<std::string>());
        r.measured_outcomes_b = bits_from_string(j.at("measured_outcomes_b").get<std::string>());
        r.stats_a.n_y_raw = j.at("n_y_a").get<std::size_t>();
        r.stats_b.n_y_raw = j.at("n_y_b").get<std::size_t>();
        r.stats_a.parity = static_cast<Bit>(j.at("parity_a").get<int>() & 1);
        r.stats_b.parity = static_cast<Bit>(j.at("parity_b").get<int>() & 1);
        r.mask_r_a = static_cast<Bit>(j.at("mask_a").get<int>() & 1);
        r.mask_r_b = static_cast<Bit>(j.at("mask_b").get<int>() & 1);
        r.hops_a = bits_from_string(j.at("hops_a").get<std::string>());
        r.hops_b = bits_from_string(j.at("hops_b").get<std::string>());
        r.shared_bit_a = static_cast<Bit>(j.at("shared_bit_a").get<int>() & 1);
        r.shared_bit_b = static_cast<Bit>(j.at("shared_bit_b").get<int>() & 1);
        r.kept = j.at("kept").get<bool>();
        r.selected_for_test = j.at("test").get<bool>();
        r.revealed_parity_a = optional_bit_from(j.at("revealed_parity_a"));
        r.revealed_parity_b = optional_bit_from(j.at("revealed_parity_b"));
        r.test_error = j.at("test_error").get<bool>();
        r.protection = parse_protection(j.at("protection").get<std::string>());
        r.eve.intercepted = j.at("eve_intercepted").get<bool>();
        r.eve.measured_family = j.at("eve_family").get<std::string>() == "Lambda" ? BlockFamily::Lambda
                                                                                   : BlockFamily::Phi;
        r.eve.measured_outcome = optional_state_from(j.at("eve_measured"));
        r.eve.fake_sent = optional_state_from(j.at("eve_fake_sent"));
        r.eve.remainder = optional_state_from(j.at("eve_remainder"));
        for (const auto& e : j.at("events")) {
            r.announcement_order.push_back(event_from_json(e));
        }
        return r;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed transcript record: ") + e.what());
    }
}

void write_jsonl(std::ostream& out, std::span<const RoundTranscript> rounds) {
    for (const auto& r : rounds) {
        out << to_jsonl_line(r) << '\n';
    }
}

std::vector<RoundTranscript> read_jsonl(std::istream& in) {
    std::vector<RoundTranscript> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        out.push_back(parse_jsonl_line(line));
    }
    return out;
}

}  // namespace catqkd
