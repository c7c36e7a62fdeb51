#include "cepshed/topology_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace cepshed {

namespace {

// --- s-expression tokenizer -------------------------------------------------

struct SexprLexer {
    const std::string& text;
    size_t pos = 0;

    explicit SexprLexer(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    std::string next() {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unexpected end of pattern expression");
        char c = text[pos];
        if (c == '(' || c == ')') {
            pos++;
            return std::string(1, c);
        }
        if (c == '"') {
            size_t end = text.find('"', pos + 1);
            if (end == std::string::npos) throw ParseError("unterminated string in pattern");
            std::string tok = text.substr(pos, end - pos + 1);
            pos = end + 1;
            return tok;
        }
        size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')')
            pos++;
        return text.substr(start, pos - start);
    }
};

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

AttrValue parse_attr_value(const std::string& tok) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"')
        return tok.substr(1, tok.size() - 2);
    if (is_number(tok)) return std::stod(tok);
    return tok;  // bare word, treated as string
}

PatternAst parse_sexpr(SexprLexer& lex) {
    std::string tok = lex.next();
    if (tok != "(") throw ParseError("pattern expression must start with '('");
    std::string head = lex.next();
    std::transform(head.begin(), head.end(), head.begin(), ::tolower);

    if (head == "atom") {
        std::string type_tok = lex.next();
        if (!is_number(type_tok)) throw ParseError("atom needs a numeric type id");
        PatternAst atom = PatternAst::atom(static_cast<TypeId>(std::stol(type_tok)));
        std::string nxt = lex.next();
        if (nxt != ")") {
            std::string value_tok = lex.next();
            atom.predicate = AttrEquals{nxt, parse_attr_value(value_tok)};
            nxt = lex.next();
            if (nxt != ")") throw ParseError("atom takes at most (atom TYPE KEY VALUE)");
        }
        return atom;
    }

    PatternAst::Kind kind;
    if (head == "seq")
        kind = PatternAst::Kind::Seq;
    else if (head == "and")
        kind = PatternAst::Kind::And;
    else if (head == "or")
        kind = PatternAst::Kind::Or;
    else
        throw ParseError("unknown pattern node: " + head);

    std::vector<PatternAst> children;
    for (;;) {
        lex.skip_ws();
        if (lex.pos < lex.text.size() && lex.text[lex.pos] == ')') {
            lex.pos++;
            break;
        }
        children.push_back(parse_sexpr(lex));
    }
    return PatternAst::node(kind, std::move(children));
}

// --- sectioned key/value file ----------------------------------------------

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::vector<std::string> split_dots(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '.') {
            out.push_back(cur);
            cur.clear();
        } else
            cur += c;
    }
    out.push_back(cur);
    return out;
}

// Expand closed-set property atoms into virtual types.
void expand_properties(Topology& topo) {
    TypeId next_id = 0;
    for (const auto& t : topo.types) next_id = std::max(next_id, t.id + 1);

    for (auto& op : topo.operators) {
        for (auto& pat : op.patterns) {
            std::function<void(PatternAst&)> walk = [&](PatternAst& n) {
                if (n.kind == PatternAst::Kind::Atom) {
                    if (!n.predicate) return;
                    // Reuse a rule for an identical (type, key, value) triple.
                    for (const auto& r : topo.virtual_types) {
                        if (r.base_type == n.atom_type && r.attr_key == n.predicate->key &&
                            r.attr_value == n.predicate->value) {
                            n.atom_type = r.virtual_type;
                            n.predicate.reset();
                            return;
                        }
                    }
                    VirtualTypeRule rule;
                    rule.base_type = n.atom_type;
                    rule.attr_key = n.predicate->key;
                    rule.attr_value = n.predicate->value;
                    rule.virtual_type = next_id++;
                    topo.types.push_back(
                        {rule.virtual_type, std::to_string(rule.base_type) + "|" + rule.attr_key +
                                                "=" + attr_to_string(rule.attr_value)});
                    topo.virtual_types.push_back(rule);
                    n.atom_type = rule.virtual_type;
                    n.predicate.reset();
                    return;
                }
                for (auto& c : n.children) walk(c);
            };
            walk(pat.ast);
        }
    }
}

} // namespace

PatternAst parse_pattern_ast(const std::string& text) {
    SexprLexer lex(text);
    PatternAst ast = parse_sexpr(lex);
    if (!lex.eof()) throw ParseError("trailing tokens after pattern expression");
    return ast;
}

Topology parse_topology(std::istream& in) {
    Topology topo;
    std::vector<std::string> section;
    std::string line;
    int lineno = 0;

    auto fail = [&](const std::string& msg) {
        throw ParseError("topology line " + std::to_string(lineno) + ": " + msg);
    };

    OperatorSpec* cur_op = nullptr;
    PatternSpec* cur_pattern = nullptr;
    SourceSpec* cur_source = nullptr;
    SinkSpec* cur_sink = nullptr;

    while (std::getline(in, line)) {
        lineno++;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;

        if (s.front() == '[') {
            if (s.back() != ']') fail("unterminated section header");
            section = split_dots(trim(s.substr(1, s.size() - 2)));
            cur_op = nullptr;
            cur_pattern = nullptr;
            cur_source = nullptr;
            cur_sink = nullptr;
            if (section.empty()) fail("empty section header");

            if (section[0] == "sources" && section.size() == 2) {
                topo.sources.push_back({section[1], {}, {}});
                cur_source = &topo.sources.back();
            } else if (section[0] == "operators" && section.size() == 2) {
                if (!topo.find_operator(section[1])) topo.operators.push_back({section[1], {}, {}, {}});
                cur_op = const_cast<OperatorSpec*>(topo.find_operator(section[1]));
            } else if (section[0] == "operators" && section.size() == 4 &&
                       section[2] == "patterns") {
                if (!topo.find_operator(section[1])) topo.operators.push_back({section[1], {}, {}, {}});
                cur_op = const_cast<OperatorSpec*>(topo.find_operator(section[1]));
                cur_op->patterns.push_back({});
                cur_pattern = &cur_op->patterns.back();
                cur_pattern->id = section[3];
            } else if (section[0] == "sinks" && section.size() == 2) {
                topo.sinks.push_back({section[1], 1.0});
                cur_sink = &topo.sinks.back();
            } else if (section[0] == "types" || section[0] == "edges") {
                // handled per line below
            } else {
                fail("unknown section [" + s.substr(1, s.size() - 2) + "]");
            }
            continue;
        }

        if (section.empty()) fail("content before any section");

        if (section[0] == "edges") {
            // producer -> consumer : t1 t2 ...
            size_t arrow = s.find("->");
            size_t colon = s.find(':');
            if (arrow == std::string::npos || colon == std::string::npos || colon < arrow)
                fail("edge must look like 'a -> b : 1 2'");
            Edge e;
            e.from = trim(s.substr(0, arrow));
            e.to = trim(s.substr(arrow + 2, colon - arrow - 2));
            for (const auto& tok : split_ws(s.substr(colon + 1))) {
                if (!is_number(tok)) fail("edge type list must be numeric");
                e.types.push_back(static_cast<TypeId>(std::stol(tok)));
            }
            topo.edges.push_back(std::move(e));
            continue;
        }

        size_t eq = s.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));

        if (section[0] == "types") {
            if (!is_number(key)) fail("type id must be numeric");
            topo.types.push_back({static_cast<TypeId>(std::stol(key)), value});
        } else if (cur_pattern) {
            if (key == "ast")
                cur_pattern->ast = parse_pattern_ast(value);
            else if (key == "window_ms")
                cur_pattern->window_ms = std::stod(value);
            else if (key == "output_type")
                cur_pattern->output_type = static_cast<TypeId>(std::stol(value));
            else if (key == "f")
                cur_pattern->f = std::stoi(value);
            else if (key == "ptime_us")
                cur_pattern->ptime_us = std::stod(value);
            else
                fail("unknown pattern key " + key);
        } else if (cur_op) {
            if (key == "latency_bound_ms")
                cur_op->latency_bound_ms = std::stod(value);
            else if (key == "service_rate_hint")
                cur_op->service_rate_hint = std::stod(value);
            else
                fail("unknown operator key " + key);
        } else if (cur_source) {
            if (key == "emits") {
                for (const auto& tok : split_ws(value))
                    cur_source->emits.push_back(static_cast<TypeId>(std::stol(tok)));
            } else if (key.rfind("rate.", 0) == 0) {
                cur_source->default_rates[static_cast<TypeId>(std::stol(key.substr(5)))] =
                    std::stod(value);
            } else
                fail("unknown source key " + key);
        } else if (cur_sink) {
            if (key == "weight")
                cur_sink->weight = std::stod(value);
            else
                fail("unknown sink key " + key);
        } else {
            fail("key outside a recognized section");
        }
    }

    expand_properties(topo);
    return topo;
}

Topology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open topology file: " + path);
    return parse_topology(in);
}

namespace {

std::string ast_to_sexpr(const PatternAst& n) {
    switch (n.kind) {
    case PatternAst::Kind::Atom: {
        std::string out = "(atom " + std::to_string(n.atom_type);
        if (n.predicate)
            out += " " + n.predicate->key + " \"" + attr_to_string(n.predicate->value) + "\"";
        return out + ")";
    }
    case PatternAst::Kind::Seq:
    case PatternAst::Kind::And:
    case PatternAst::Kind::Or: {
        std::string head = n.kind == PatternAst::Kind::Seq   ? "seq"
                           : n.kind == PatternAst::Kind::And ? "and"
                                                             : "or";
        std::string out = "(" + head;
        for (const auto& c : n.children) out += " " + ast_to_sexpr(c);
        return out + ")";
    }
    }
    return "";
}

} // namespace

std::string to_config(const Topology& topo) {
    std::ostringstream out;
    out << "[types]\n";
    for (const auto& t : topo.types) out << t.id << " = " << t.name << "\n";
    for (const auto& s : topo.sources) {
        out << "\n[sources." << s.id << "]\nemits =";
        for (TypeId t : s.emits) out << " " << t;
        out << "\n";
        for (const auto& [t, r] : s.default_rates) out << "rate." << t << " = " << r << "\n";
    }
    for (const auto& o : topo.operators) {
        out << "\n[operators." << o.id << "]\n";
        if (o.latency_bound_ms) out << "latency_bound_ms = " << *o.latency_bound_ms << "\n";
        if (o.service_rate_hint) out << "service_rate_hint = " << *o.service_rate_hint << "\n";
        for (const auto& p : o.patterns) {
            out << "\n[operators." << o.id << ".patterns." << p.id << "]\n";
            out << "ast = " << ast_to_sexpr(p.ast) << "\n";
            out << "window_ms = " << p.window_ms << "\n";
            out << "output_type = " << p.output_type << "\n";
            out << "f = " << p.f << "\n";
            out << "ptime_us = " << p.ptime_us << "\n";
        }
    }
    for (const auto& s : topo.sinks)
        out << "\n[sinks." << s.id << "]\nweight = " << s.weight << "\n";
    out << "\n[edges]\n";
    for (const auto& e : topo.edges) {
        out << e.from << " -> " << e.to << " :";
        for (TypeId t : e.types) out << " " << t;
        out << "\n";
    }
    return out.str();
}

} // namespace cepshed
