#pragma once

// The four computations of the demo corpus, shared by every suite that wants
// parsed What programs: two sparse matrix-vector kernels, a dot product with
// a scalar result, and a dense gemm with a depth-3 nest.

namespace programs {

inline const char* kSpmvCsr = R"(
COMPUTATION spmv_csr
forall (0 <= i < rows) {
    output[i] = dot (row_ptr[i] <= j < row_ptr[i + 1]) val[j] * x[col_ind[j]];
}
)";

inline const char* kDotProduct = R"(
COMPUTATION dotproduct
result = dot (0 <= i < length) a[i] * b[i];
)";

inline const char* kSpmvJds = R"(
COMPUTATION spmv_jds
forall (0 <= i < rows) {
    output[i] = dot (0 <= k < nzcnt[perm[i]]) val[jd_ptr[k] + perm[i]] * x[col_ind[jd_ptr[k] + perm[i]]];
}
)";

inline const char* kGemm = R"(
COMPUTATION gemm
forall (0 <= i < n) {
    forall (0 <= j < m) {
        c[i * m + j] = dot (0 <= k < p) a[i * p + k] * b[k * m + j];
    }
}
)";

// A GPU-library harness for spmv_csr in the style of the demo corpus: two
// scalar-producing marshal classes feed the transfer extents, device arrays
// are moved by CudaRead/CudaWrite, and library handles persist across calls.
inline const char* kCusparseSpmv = R"(
INPUT CudaRead
{
    cudaMemcpy(out, in, size, cudaMemcpyHostToDevice);
}
BeforeFirstExecution
{
    cudaMalloc((void**)&out, size);
}
AfterLastExecution
{
    cudaFree(out);
}

OUTPUT CudaWrite
{
    cudaMemcpy(in, out, size, cudaMemcpyDeviceToHost);
}
BeforeFirstExecution
{
    cudaMalloc((void**)&out, size);
}
AfterLastExecution
{
    cudaFree(out);
}

INPUT LastEntry
{
    out = ((const int*)in)[size / sizeof(int) - 1];
}

INPUT ReadableMax
{
    int maxv = -1;
    for (size_t i = 0; i < size / sizeof(int); ++i)
        if (((const int*)in)[i] > maxv) maxv = ((const int*)in)[i];
    out = maxv + 1;
}

HARNESS cusparse_spmv IMPLEMENTS spmv_csr
{
    double alpha = 1.0, beta = 0.0;
    cusparseDcsrmv(handle, CUSPARSE_OPERATION_NON_TRANSPOSE, rows, cols, nnz,
                   &alpha, descr, cuVal, cuRowstr, cuColidx, cuX, &beta, cuOut);
    cudaDeviceSynchronize();
}
Marshaling
{
    int nnz = LastEntry of row_ptr[0 .. rows + 1];
    int cols = ReadableMax of col_ind[0 .. nnz];
    DeviceArray<int> cuRowstr = CudaRead of row_ptr[0 .. rows + 1];
    DeviceArray<int> cuColidx = CudaRead of col_ind[0 .. nnz];
    DeviceArray<double> cuVal = CudaRead of val[0 .. nnz];
    DeviceArray<double> cuX = CudaRead of x[0 .. cols];
    DeviceArray<double> cuOut = CudaWrite of output[0 .. rows];
}
PersistentVariables
{
    cusparseHandle_t handle;
    cusparseMatDescr_t descr;
}
BeforeFirstExecution
{
    cusparseCreate(&handle);
    cusparseCreateMatDescr(&descr);
}
AfterLastExecution
{
    cusparseDestroyMatDescr(descr);
    cusparseDestroy(handle);
}
CppHeaderFiles
{
    <cuda_runtime.h>;
    <cusparse.h>;
}
)";

} // namespace programs
