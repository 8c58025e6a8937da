#ifndef QST_VERSION_HPP
#define QST_VERSION_HPP

namespace qst {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qst

#endif  // QST_VERSION_HPP
