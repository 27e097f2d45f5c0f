#ifndef GLCMCNN_ERRORS_HPP
#define GLCMCNN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace glcmcnn {

// Error families map to CLI exit codes: validation=2, io=3, numeric=4.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace glcmcnn

#endif // GLCMCNN_ERRORS_HPP
