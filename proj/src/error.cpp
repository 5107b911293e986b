#include "gam/error.hpp"

namespace gam {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::nonfinite: return "E_NONFINITE";
        case Errc::shape: return "E_SHAPE";
        case Errc::overlap: return "E_OVERLAP";
        case Errc::range: return "E_RANGE";
        case Errc::role: return "E_ROLE";
        case Errc::parse: return "E_PARSE";
        case Errc::ontology: return "E_ONTOLOGY";
        case Errc::coef: return "E_COEF";
        case Errc::span: return "E_SPAN";
        case Errc::vocab: return "E_VOCAB";
        case Errc::config: return "E_CONFIG";
    }
    return "E_UNKNOWN";
}

void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace gam
