// Copyright 2026 The GenXSS Authors
// SPDX-License-Identifier: Apache-2.0

#include "genxss/regex.hpp"

#include <algorithm>

namespace genxss::rx {

namespace {

constexpr std::size_t max_program = 200000;

enum class node_kind { empty, byte, set, any, concat, alternate, group, repeat, assertion };

struct node {
    node_kind kind{node_kind::empty};
    std::uint8_t byte{0};
    std::bitset<256> set;
    std::vector<node> children;
    std::uint32_t min{0};
    std::uint32_t max{0};
    bool unbounded{false};
    bool greedy{true};
    regex::opcode assertion{regex::opcode::assert_begin};
};

bool is_word_byte(unsigned char c) noexcept
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::bitset<256> class_digit()
{
    std::bitset<256> s;
    for (int c = '0'; c <= '9'; ++c) {
        s.set(c);
    }
    return s;
}

std::bitset<256> class_space()
{
    std::bitset<256> s;
    for (int c : {' ', '\t', '\n', '\r', '\f', '\v'}) {
        s.set(c);
    }
    return s;
}

std::bitset<256> class_word()
{
    std::bitset<256> s;
    for (int c = 0; c < 256; ++c) {
        if (is_word_byte(static_cast<unsigned char>(c))) {
            s.set(c);
        }
    }
    return s;
}

int hex_digit(char c) noexcept
{
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
    }
    return -1;
}

class parser {
public:
    explicit parser(std::string_view p) : p_(p) {}

    node parse(bool &icase)
    {
        if (p_.substr(0, 4) == "(?i)") {
            icase = true;
            pos_ = 4;
        }
        node n = parse_alternation();
        if (pos_ < p_.size()) {
            // Only an unbalanced ')' can stop the top-level parse early.
            throw regex_error("unmatched ')'", pos_);
        }
        return n;
    }

private:
    std::string_view p_;
    std::size_t pos_{0};

    [[nodiscard]] bool done() const { return pos_ >= p_.size(); }
    [[nodiscard]] char peek() const { return p_[pos_]; }

    node parse_alternation()
    {
        std::vector<node> branches;
        branches.push_back(parse_concat());
        while (!done() && peek() == '|') {
            ++pos_;
            branches.push_back(parse_concat());
        }
        if (branches.size() == 1) {
            return std::move(branches.front());
        }
        node n;
        n.kind = node_kind::alternate;
        n.children = std::move(branches);
        return n;
    }

    node parse_concat()
    {
        node n;
        n.kind = node_kind::concat;
        while (!done() && peek() != '|' && peek() != ')') {
            node atom = parse_atom();
            parse_quantifiers(atom);
            n.children.push_back(std::move(atom));
        }
        return n;
    }

    void parse_quantifiers(node &atom)
    {
        while (!done()) {
            const std::size_t start = pos_;
            std::uint32_t min = 0;
            std::uint32_t max = 0;
            bool unbounded = false;
            const char c = peek();
            if (c == '*') {
                unbounded = true;
                ++pos_;
            } else if (c == '+') {
                min = 1;
                unbounded = true;
                ++pos_;
            } else if (c == '?') {
                max = 1;
                ++pos_;
            } else if (c == '{') {
                if (!parse_braces(min, max, unbounded)) {
                    return;
                }
            } else {
                return;
            }
            if (atom.kind == node_kind::assertion || atom.kind == node_kind::empty) {
                throw regex_error("nothing to repeat", start);
            }
            node rep;
            rep.kind = node_kind::repeat;
            rep.min = min;
            rep.max = max;
            rep.unbounded = unbounded;
            if (!done() && peek() == '?') {
                rep.greedy = false;
                ++pos_;
            } else if (!done() && peek() == '+') {
                throw regex_error("possessive quantifiers are not supported", pos_);
            }
            rep.children.push_back(std::move(atom));
            atom = std::move(rep);
            if (!done() && (peek() == '*' || peek() == '+' || peek() == '?' || peek() == '{')) {
                std::uint32_t a = 0;
                std::uint32_t b = 0;
                bool u = false;
                const std::size_t save = pos_;
                if (peek() != '{' || parse_braces(a, b, u)) {
                    throw regex_error("multiple repeat", save);
                }
            }
        }
    }

    // Parses `{m}`, `{m,}` or `{m,n}` at pos_. Anything else is a literal '{'
    // and leaves pos_ untouched.
    bool parse_braces(std::uint32_t &min, std::uint32_t &max, bool &unbounded)
    {
        std::size_t i = pos_ + 1;
        auto read_number = [&](std::uint32_t &out) {
            const std::size_t begin = i;
            std::uint64_t v = 0;
            while (i < p_.size() && p_[i] >= '0' && p_[i] <= '9') {
                v = v * 10 + static_cast<std::uint64_t>(p_[i] - '0');
                if (v > regex::max_repeat) {
                    throw regex_error("repeat count exceeds " + std::to_string(regex::max_repeat), begin);
                }
                ++i;
            }
            out = static_cast<std::uint32_t>(v);
            return i > begin;
        };
        std::uint32_t lo = 0;
        if (!read_number(lo)) {
            return false;
        }
        std::uint32_t hi = lo;
        bool open = false;
        if (i < p_.size() && p_[i] == ',') {
            ++i;
            if (!read_number(hi)) {
                open = true;
            }
        }
        if (i >= p_.size() || p_[i] != '}') {
            return false;
        }
        if (!open && hi < lo) {
            throw regex_error("numbers out of order in {} quantifier", pos_);
        }
        pos_ = i + 1;
        min = lo;
        max = hi;
        unbounded = open;
        return true;
    }

    node parse_atom()
    {
        const std::size_t start = pos_;
        const char c = p_[pos_++];
        node n;
        switch (c) {
        case '(':
            return parse_group(start);
        case '[':
            n.kind = node_kind::set;
            n.set = parse_class(start);
            return n;
        case '.':
            n.kind = node_kind::any;
            return n;
        case '^':
            n.kind = node_kind::assertion;
            n.assertion = regex::opcode::assert_begin;
            return n;
        case '$':
            n.kind = node_kind::assertion;
            n.assertion = regex::opcode::assert_end;
            return n;
        case '\\':
            return parse_escape(start);
        case '*':
        case '+':
        case '?':
            throw regex_error("nothing to repeat", start);
        default:
            n.kind = node_kind::byte;
            n.byte = static_cast<std::uint8_t>(c);
            return n;
        }
    }

    node parse_group(std::size_t start)
    {
        if (!done() && peek() == '?') {
            if (p_.substr(pos_, 2) != "?:") {
                const auto ext = p_.substr(pos_, 3);
                if (ext.starts_with("?=") || ext.starts_with("?!") || ext == "?<=" || ext == "?<!") {
                    throw regex_error("lookaround is not supported", start);
                }
                if (ext.starts_with("?i")) {
                    throw regex_error("inline flags are only supported at the pattern start", start);
                }
                throw regex_error("unsupported group construct", start);
            }
            pos_ += 2;
        }
        node inner = parse_alternation();
        if (done() || peek() != ')') {
            throw regex_error("missing ')'", start);
        }
        ++pos_;
        node n;
        n.kind = node_kind::group;
        n.children.push_back(std::move(inner));
        return n;
    }

    // Escapes usable both inside and outside classes. Returns false when the
    // escape is not a character/class escape.
    bool class_escape(char e, std::size_t at, std::bitset<256> &out)
    {
        switch (e) {
        case 'd':
            out |= class_digit();
            return true;
        case 'D':
            out |= ~class_digit();
            return true;
        case 's':
            out |= class_space();
            return true;
        case 'S':
            out |= ~class_space();
            return true;
        case 'w':
            out |= class_word();
            return true;
        case 'W':
            out |= ~class_word();
            return true;
        default:
            break;
        }
        if (auto b = char_escape(e, at)) {
            out.set(*b);
            return true;
        }
        return false;
    }

    std::optional<std::uint8_t> char_escape(char e, std::size_t at)
    {
        switch (e) {
        case 'n':
            return '\n';
        case 'r':
            return '\r';
        case 't':
            return '\t';
        case 'f':
            return '\f';
        case 'v':
            return '\v';
        case 'x': {
            if (pos_ + 2 <= p_.size()) {
                const int hi = hex_digit(p_[pos_]);
                const int lo = hex_digit(p_[pos_ + 1]);
                if (hi >= 0 && lo >= 0) {
                    pos_ += 2;
                    return static_cast<std::uint8_t>(hi * 16 + lo);
                }
            }
            throw regex_error("bad \\x escape", at);
        }
        default:
            break;
        }
        if (e >= '1' && e <= '9') {
            throw regex_error("backreferences are not supported", at);
        }
        const auto u = static_cast<unsigned char>(e);
        if (is_word_byte(u)) {
            throw regex_error(std::string("unsupported escape \\") + e, at);
        }
        return static_cast<std::uint8_t>(e);
    }

    node parse_escape(std::size_t start)
    {
        if (done()) {
            throw regex_error("trailing backslash", start);
        }
        const char e = p_[pos_++];
        node n;
        if (e == 'b' || e == 'B') {
            n.kind = node_kind::assertion;
            n.assertion = e == 'b' ? regex::opcode::assert_word : regex::opcode::assert_not_word;
            return n;
        }
        std::bitset<256> s;
        if (!class_escape(e, start, s)) {
            throw regex_error(std::string("unsupported escape \\") + e, start);
        }
        if (s.count() == 1) {
            n.kind = node_kind::byte;
            for (int i = 0; i < 256; ++i) {
                if (s.test(i)) {
                    n.byte = static_cast<std::uint8_t>(i);
                }
            }
        } else {
            n.kind = node_kind::set;
            n.set = s;
        }
        return n;
    }

    std::bitset<256> parse_class(std::size_t start)
    {
        std::bitset<256> s;
        bool negate = false;
        if (!done() && peek() == '^') {
            negate = true;
            ++pos_;
        }
        bool first = true;
        while (true) {
            if (done()) {
                throw regex_error("missing ']'", start);
            }
            const std::size_t at = pos_;
            char c = p_[pos_++];
            if (c == ']' && !first) {
                break;
            }
            first = false;
            std::optional<std::uint8_t> lo;
            if (c == '\\') {
                if (done()) {
                    throw regex_error("missing ']'", start);
                }
                const char e = p_[pos_++];
                if (e == 'b') {
                    lo = '\b';
                } else {
                    std::bitset<256> esc;
                    if (!class_escape(e, at, esc)) {
                        throw regex_error(std::string("unsupported escape \\") + e, at);
                    }
                    if (esc.count() != 1) {
                        s |= esc;
                        continue;
                    }
                    for (int i = 0; i < 256; ++i) {
                        if (esc.test(i)) {
                            lo = static_cast<std::uint8_t>(i);
                        }
                    }
                }
            } else {
                lo = static_cast<std::uint8_t>(c);
            }
            // Range?
            if (pos_ + 1 < p_.size() && peek() == '-' && p_[pos_ + 1] != ']') {
                ++pos_;
                const std::size_t hi_at = pos_;
                char h = p_[pos_++];
                std::uint8_t hi = static_cast<std::uint8_t>(h);
                if (h == '\\') {
                    if (done()) {
                        throw regex_error("missing ']'", start);
                    }
                    const char e = p_[pos_++];
                    auto b = char_escape(e, hi_at);
                    if (!b) {
                        throw regex_error("bad range end", hi_at);
                    }
                    hi = *b;
                }
                if (hi < *lo) {
                    throw regex_error("bad character range", at);
                }
                for (int i = *lo; i <= hi; ++i) {
                    s.set(i);
                }
                continue;
            }
            s.set(*lo);
        }
        if (negate) {
            s.flip();
        }
        return s;
    }
};

bool contains_unbounded(const node &n)
{
    if (n.kind == node_kind::repeat && n.unbounded) {
        return true;
    }
    return std::any_of(n.children.begin(), n.children.end(), contains_unbounded);
}

bool nested_unbounded(const node &n)
{
    if (n.kind == node_kind::repeat && n.unbounded && contains_unbounded(n.children.front())) {
        return true;
    }
    return std::any_of(n.children.begin(), n.children.end(), nested_unbounded);
}

std::bitset<256> fold_case(std::bitset<256> s)
{
    for (int c = 'a'; c <= 'z'; ++c) {
        const int u = c - 'a' + 'A';
        if (s.test(c) || s.test(u)) {
            s.set(c);
            s.set(u);
        }
    }
    return s;
}

} // namespace

class compiler {
public:
    explicit compiler(regex &re) : re_(re) {}

    void emit_program(const node &root)
    {
        emit(root);
        add({regex::opcode::match});
    }

private:
    regex &re_;

    std::uint32_t pc() const { return static_cast<std::uint32_t>(re_.program_.size()); }

    std::uint32_t add(regex::instruction in)
    {
        if (re_.program_.size() >= max_program) {
            throw regex_error("pattern too large", 0);
        }
        re_.program_.push_back(in);
        return pc() - 1;
    }

    std::uint32_t add_set(const std::bitset<256> &s)
    {
        re_.sets_.push_back(re_.icase_ ? fold_case(s) : s);
        return static_cast<std::uint32_t>(re_.sets_.size() - 1);
    }

    void emit(const node &n)
    {
        switch (n.kind) {
        case node_kind::empty:
            return;
        case node_kind::byte: {
            const char c = static_cast<char>(n.byte);
            const bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
            if (re_.icase_ && alpha) {
                std::bitset<256> s;
                s.set(n.byte);
                add({regex::opcode::set, 0, add_set(s)});
            } else {
                add({regex::opcode::byte, n.byte});
            }
            return;
        }
        case node_kind::set:
            add({regex::opcode::set, 0, add_set(n.set)});
            return;
        case node_kind::any:
            add({regex::opcode::any});
            return;
        case node_kind::assertion:
            add({n.assertion});
            return;
        case node_kind::concat:
        case node_kind::group:
            for (const auto &child : n.children) {
                emit(child);
            }
            return;
        case node_kind::alternate: {
            // split L1, next; L1: a; jump end; next: split L2, ... ; last
            std::vector<std::uint32_t> jumps;
            for (std::size_t i = 0; i + 1 < n.children.size(); ++i) {
                const auto split = add({regex::opcode::split});
                re_.program_[split].x = pc();
                emit(n.children[i]);
                jumps.push_back(add({regex::opcode::jump}));
                re_.program_[split].y = pc();
            }
            emit(n.children.back());
            for (auto j : jumps) {
                re_.program_[j].x = pc();
            }
            return;
        }
        case node_kind::repeat:
            emit_repeat(n);
            return;
        }
    }

    void emit_optional(const node &body, bool greedy)
    {
        const auto split = add({regex::opcode::split});
        const auto first = pc();
        emit(body);
        const auto after = pc();
        re_.program_[split].x = greedy ? first : after;
        re_.program_[split].y = greedy ? after : first;
    }

    void emit_star(const node &body, bool greedy)
    {
        const auto split = add({regex::opcode::split});
        const auto first = pc();
        emit(body);
        add({regex::opcode::jump, 0, 0, split});
        const auto after = pc();
        re_.program_[split].x = greedy ? first : after;
        re_.program_[split].y = greedy ? after : first;
    }

    void emit_repeat(const node &n)
    {
        const node &body = n.children.front();
        for (std::uint32_t i = 0; i < n.min; ++i) {
            emit(body);
        }
        if (n.unbounded) {
            emit_star(body, n.greedy);
            return;
        }
        for (std::uint32_t i = n.min; i < n.max; ++i) {
            emit_optional(body, n.greedy);
        }
    }
};

regex regex::compile(std::string_view pattern)
{
    regex re;
    re.pattern_ = std::string(pattern);
    parser p(pattern);
    node root = p.parse(re.icase_);
    re.nested_unbounded_ = nested_unbounded(root);
    compiler(re).emit_program(root);
    return re;
}

namespace {

struct thread {
    std::uint32_t pc;
    std::size_t start;
};

class thread_list {
public:
    explicit thread_list(std::size_t n) : mark_(n, 0) {}

    void clear()
    {
        threads_.clear();
        ++generation_;
    }

    bool visit(std::uint32_t pc)
    {
        if (mark_[pc] == generation_) {
            return false;
        }
        mark_[pc] = generation_;
        return true;
    }

    void push(thread t) { threads_.push_back(t); }
    [[nodiscard]] const std::vector<thread> &threads() const { return threads_; }

private:
    std::vector<thread> threads_;
    std::vector<std::uint64_t> mark_;
    std::uint64_t generation_{1};
};

} // namespace

std::optional<match_span> regex::search(std::string_view subject) const
{
    const std::size_t n = subject.size();
    thread_list current(program_.size());
    thread_list next(program_.size());
    std::vector<thread> stack;

    auto word_at = [&](std::size_t i) {
        return i < n && is_word_byte(static_cast<unsigned char>(subject[i]));
    };

    // Follows empty transitions in priority order (depth-first, x before y).
    auto add_thread = [&](thread_list &list, std::uint32_t start_pc, std::size_t start,
                          std::size_t at) {
        stack.clear();
        stack.push_back({start_pc, start});
        while (!stack.empty()) {
            const thread t = stack.back();
            stack.pop_back();
            if (!list.visit(t.pc)) {
                continue;
            }
            const instruction &in = program_[t.pc];
            switch (in.op) {
            case opcode::jump:
                stack.push_back({in.x, t.start});
                break;
            case opcode::split:
                stack.push_back({in.y, t.start});
                stack.push_back({in.x, t.start});
                break;
            case opcode::assert_begin:
                if (at == 0) {
                    stack.push_back({t.pc + 1, t.start});
                }
                break;
            case opcode::assert_end:
                if (at == n) {
                    stack.push_back({t.pc + 1, t.start});
                }
                break;
            case opcode::assert_word:
            case opcode::assert_not_word: {
                const bool boundary = (at > 0 && word_at(at - 1)) != word_at(at);
                if (boundary == (in.op == opcode::assert_word)) {
                    stack.push_back({t.pc + 1, t.start});
                }
                break;
            }
            default:
                list.push(t);
                break;
            }
        }
    };

    std::optional<match_span> found;
    current.clear();
    for (std::size_t pos = 0;; ++pos) {
        if (!found) {
            add_thread(current, 0, pos, pos);
        }
        if (current.threads().empty() && (found || pos >= n)) {
            break;
        }
        next.clear();
        for (const thread &t : current.threads()) {
            const instruction &in = program_[t.pc];
            bool step = false;
            switch (in.op) {
            case opcode::match:
                found = match_span{t.start, pos};
                break;
            case opcode::byte:
                step = pos < n && static_cast<std::uint8_t>(subject[pos]) == in.byte;
                break;
            case opcode::set:
                step = pos < n && sets_[in.set].test(static_cast<std::uint8_t>(subject[pos]));
                break;
            case opcode::any:
                step = pos < n && subject[pos] != '\n';
                break;
            default:
                break;
            }
            if (in.op == opcode::match) {
                // Lower-priority threads can no longer win.
                break;
            }
            if (step) {
                add_thread(next, t.pc + 1, t.start, pos + 1);
            }
        }
        if (pos >= n) {
            break;
        }
        std::swap(current, next);
    }
    return found;
}

} // namespace genxss::rx
