#include "soildet/detection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>

namespace soildet {

IouComponents iou_components(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid())
        throw std::invalid_argument("iou_components: degenerate box");
    const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
    const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
    IouComponents c;
    c.intersect = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
    c.union_area = a.area() + b.area() - c.intersect;
    c.iou = iou_from_areas(c.intersect, c.union_area);
    return c;
}

double iou_from_areas(double intersect, double union_area) {
    if (!(union_area > 0.0))
        throw std::invalid_argument("iou_from_areas: union must be > 0");
    return intersect / union_area;
}

// ---------------------------------------------------------------------------
// Minimal XML subset for VOC annotation files: elements, text, comments and
// the five standard entities. Attributes are scanned past, never interpreted.
namespace {

struct XmlCursor {
    std::string_view text;
    std::size_t pos = 0;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool consume(std::string_view token) {
        if (text.substr(pos, token.size()) == token) {
            pos += token.size();
            return true;
        }
        return false;
    }

    void skip_prolog_and_comments() {
        for (;;) {
            skip_ws();
            if (consume("<?")) {
                auto end = text.find("?>", pos);
                if (end == std::string_view::npos) throw VocError("unterminated prolog");
                pos = end + 2;
            } else if (consume("<!--")) {
                auto end = text.find("-->", pos);
                if (end == std::string_view::npos) throw VocError("unterminated comment");
                pos = end + 3;
            } else {
                return;
            }
        }
    }
};

std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
        if (raw[i] == '&') {
            auto semi = raw.find(';', i);
            if (semi != std::string_view::npos) {
                std::string_view ent = raw.substr(i + 1, semi - i - 1);
                char c = 0;
                if (ent == "lt") c = '<';
                else if (ent == "gt") c = '>';
                else if (ent == "amp") c = '&';
                else if (ent == "quot") c = '"';
                else if (ent == "apos") c = '\'';
                if (c) {
                    out.push_back(c);
                    i = semi + 1;
                    continue;
                }
            }
        }
        out.push_back(raw[i++]);
    }
    return out;
}

struct XmlElement {
    std::string name;
    std::string text;  // concatenated character data
    std::vector<XmlElement> children;

    const XmlElement* child(std::string_view n) const {
        for (const auto& c : children)
            if (c.name == n) return &c;
        return nullptr;
    }
};

XmlElement parse_element(XmlCursor& cur) {
    cur.skip_ws();
    if (cur.eof() || cur.peek() != '<') throw VocError("expected element");
    ++cur.pos;
    XmlElement el;
    while (!cur.eof() && (std::isalnum(static_cast<unsigned char>(cur.peek())) ||
                          cur.peek() == '_' || cur.peek() == '-' || cur.peek() == ':'))
        el.name.push_back(cur.text[cur.pos++]);
    if (el.name.empty()) throw VocError("malformed element name");
    // skip attributes
    while (!cur.eof() && cur.peek() != '>' && cur.peek() != '/') {
        if (cur.peek() == '"' || cur.peek() == '\'') {
            char q = cur.text[cur.pos++];
            auto end = cur.text.find(q, cur.pos);
            if (end == std::string_view::npos) throw VocError("unterminated attribute");
            cur.pos = end + 1;
        } else {
            ++cur.pos;
        }
    }
    if (cur.eof()) throw VocError("unterminated start tag");
    if (cur.consume("/>")) return el;
    ++cur.pos;  // '>'

    for (;;) {
        auto lt = cur.text.find('<', cur.pos);
        if (lt == std::string_view::npos) throw VocError("missing end tag for " + el.name);
        if (lt > cur.pos)
            el.text += decode_entities(cur.text.substr(cur.pos, lt - cur.pos));
        cur.pos = lt;
        if (cur.consume("<!--")) {
            auto end = cur.text.find("-->", cur.pos);
            if (end == std::string_view::npos) throw VocError("unterminated comment");
            cur.pos = end + 3;
            continue;
        }
        if (cur.text.substr(cur.pos, 2) == "</") {
            cur.pos += 2;
            std::string closing;
            while (!cur.eof() && cur.peek() != '>')
                closing.push_back(cur.text[cur.pos++]);
            if (cur.eof()) throw VocError("unterminated end tag");
            ++cur.pos;
            // trim trailing whitespace in the closing name
            while (!closing.empty() && std::isspace(static_cast<unsigned char>(closing.back())))
                closing.pop_back();
            if (closing != el.name)
                throw VocError("mismatched end tag: " + closing + " vs " + el.name);
            return el;
        }
        el.children.push_back(parse_element(cur));
    }
}

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_coord(const XmlElement& bndbox, const char* field) {
    const XmlElement* el = bndbox.child(field);
    if (!el) throw VocError(std::string("bndbox missing field ") + field);
    std::string v = trimmed(el->text);
    if (v.empty()) throw VocError(std::string("bndbox field empty: ") + field);
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
        throw VocError(std::string("bndbox field not numeric: ") + field);
    return d;
}

// Shortest decimal text that parses back to the same double.
std::string shortest_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

void append_escaped(std::string& out, std::string_view s) {
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out.push_back(c);
        }
    }
}

}  // namespace

Annotation parse_voc(std::string_view xml_text) {
    XmlCursor cur{xml_text};
    cur.skip_prolog_and_comments();
    XmlElement root = parse_element(cur);
    if (root.name != "annotation") throw VocError("root element must be <annotation>");

    Annotation ann;
    if (const XmlElement* fn = root.child("filename"))
        ann.image_id = trimmed(fn->text);
    else if (const XmlElement* p = root.child("path"))
        ann.image_id = trimmed(p->text);

    for (const XmlElement& obj : root.children) {
        if (obj.name != "object") continue;
        const XmlElement* name = obj.child("name");
        const XmlElement* bnd = obj.child("bndbox");
        if (!bnd) throw VocError("object missing bndbox");
        BoundingBox box{parse_coord(*bnd, "xmin"), parse_coord(*bnd, "ymin"),
                        parse_coord(*bnd, "xmax"), parse_coord(*bnd, "ymax")};
        if (!box.valid())
            throw VocError("degenerate bndbox (xmax <= xmin or ymax <= ymin)");
        ann.boxes.push_back({name ? trimmed(name->text) : std::string(), box});
    }
    return ann;
}

std::string serialize_voc(const Annotation& annotation) {
    std::string out = "<annotation>\n  <filename>";
    append_escaped(out, annotation.image_id);
    out += "</filename>\n";
    for (const LabeledBox& lb : annotation.boxes) {
        out += "  <object>\n    <name>";
        append_escaped(out, lb.label);
        out += "</name>\n    <bndbox>\n";
        out += "      <xmin>" + shortest_double(lb.box.xmin) + "</xmin>\n";
        out += "      <ymin>" + shortest_double(lb.box.ymin) + "</ymin>\n";
        out += "      <xmax>" + shortest_double(lb.box.xmax) + "</xmax>\n";
        out += "      <ymax>" + shortest_double(lb.box.ymax) + "</ymax>\n";
        out += "    </bndbox>\n  </object>\n";
    }
    out += "</annotation>\n";
    return out;
}

MatchReport match_detections(std::span<const BoundingBox> preds,
                             std::span<const BoundingBox> gts, double threshold) {
    if (!(threshold > 0.0) || threshold > 1.0)
        throw std::invalid_argument("match_detections: threshold must be in (0,1]");
    struct Cand {
        double iou;
        std::size_t p, g;
    };
    std::vector<Cand> cands;
    for (std::size_t p = 0; p < preds.size(); ++p)
        for (std::size_t g = 0; g < gts.size(); ++g) {
            double iou = iou_components(preds[p], gts[g]).iou;
            if (iou >= threshold) cands.push_back({iou, p, g});
        }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.iou > b.iou; });

    MatchReport report;
    report.threshold = threshold;
    std::vector<bool> p_used(preds.size(), false), g_used(gts.size(), false);
    for (const Cand& c : cands) {
        if (p_used[c.p] || g_used[c.g]) continue;
        p_used[c.p] = g_used[c.g] = true;
        report.pairs.push_back({c.p, c.g, c.iou});
    }
    report.true_positives = report.pairs.size();
    report.false_positives = preds.size() - report.true_positives;
    report.false_negatives = gts.size() - report.true_positives;
    return report;
}

void write_eval_line(std::ostream& out, const EvalLine& line) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), " Detection%zu (iou, intersect, union): (%.17g, %.17g, %.17g) matched=%d",
                  line.detection_index, line.components.iou,
                  line.components.intersect, line.components.union_area,
                  line.matched ? 1 : 0);
    out << line.image_id << buf << '\n';
}

}  // namespace soildet
