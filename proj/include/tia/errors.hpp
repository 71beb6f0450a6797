#ifndef TIA_ERRORS_HPP
#define TIA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tia {

// Error categories map 1:1 onto CLI exit codes (see README).
enum class ErrorCode {
    bad_argument,     // invalid parameter or flag value
    missing_input,    // input file/directory does not exist
    schema,           // malformed document or record
    integrity,        // dangling reference between records
    data,             // semantically invalid data (duplicates, bad ordering, ...)
    estimation,       // model fitting failure (non-convergence, collinearity)
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline Error bad_argument_error(const std::string& what) { return {ErrorCode::bad_argument, what}; }
inline Error missing_input_error(const std::string& what) { return {ErrorCode::missing_input, what}; }
inline Error schema_error(const std::string& what) { return {ErrorCode::schema, what}; }
inline Error integrity_error(const std::string& what) { return {ErrorCode::integrity, what}; }
inline Error data_error(const std::string& what) { return {ErrorCode::data, what}; }
inline Error estimation_error(const std::string& what) { return {ErrorCode::estimation, what}; }

} // namespace tia

#endif
