#include "coreselect/error.hpp"

namespace coreselect {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::format: return "format error";
        case Errc::data: return "data error";
        case Errc::duplicate_id: return "duplicate-id error";
        case Errc::split: return "split error";
        case Errc::shape: return "shape error";
        case Errc::size: return "size error";
        case Errc::parameter: return "parameter error";
        case Errc::consistency: return "consistency error";
        case Errc::degenerate: return "degenerate-data error";
        case Errc::undefined: return "undefined-value error";
        case Errc::spec: return "spec error";
        case Errc::config: return "config error";
        case Errc::io: return "io error";
        case Errc::state: return "state error";
    }
    return "error";
}

int exit_code(Errc code) noexcept {
    switch (code) {
        case Errc::config:
        case Errc::parameter:
        case Errc::spec:
            return 2;
        case Errc::format:
        case Errc::data:
        case Errc::duplicate_id:
        case Errc::split:
        case Errc::shape:
        case Errc::size:
        case Errc::consistency:
        case Errc::state:
            return 3;
        case Errc::degenerate:
        case Errc::undefined:
            return 4;
        case Errc::io:
            return 5;
    }
    return 1;
}

}  // namespace coreselect
