// Generated harness: cusparse_spmv implements spmv_csr.
// Emitted by lilac gen-harness; edits will be overwritten.

#include <cuda_runtime.h>
#include <cusparse.h>

#include <lilac/marshal.hpp>

#include <cstddef>
#include <cstdint>
#include <cstdlib>

// ---- marshal class LastEntry (input) ----

template <typename In, typename Out>
static void LastEntry_construct(In in, std::size_t size, Out& out) {}

template <typename In, typename Out>
static void LastEntry_update(In in, std::size_t size, Out& out) {
    out = ((const int*)in)[size / sizeof(int) - 1];
}

template <typename In, typename Out>
static void LastEntry_destruct(In in, std::size_t size, Out& out) {}

// ---- marshal class ReadableMax (input) ----

template <typename In, typename Out>
static void ReadableMax_construct(In in, std::size_t size, Out& out) {}

template <typename In, typename Out>
static void ReadableMax_update(In in, std::size_t size, Out& out) {
    int maxv = -1;
    for (size_t i = 0; i < size / sizeof(int); ++i)
        if (((const int*)in)[i] > maxv) maxv = ((const int*)in)[i];
    out = maxv + 1;
}

template <typename In, typename Out>
static void ReadableMax_destruct(In in, std::size_t size, Out& out) {}

// ---- marshal class CudaRead (input) ----

template <typename In, typename Out>
static void CudaRead_construct(In in, std::size_t size, Out& out) {
    cudaMalloc((void**)&out, size);
}

template <typename In, typename Out>
static void CudaRead_update(In in, std::size_t size, Out& out) {
    cudaMemcpy(out, in, size, cudaMemcpyHostToDevice);
}

template <typename In, typename Out>
static void CudaRead_destruct(In in, std::size_t size, Out& out) {
    cudaFree(out);
}

// ---- marshal class CudaWrite (output) ----

template <typename In, typename Out>
static void CudaWrite_construct(In in, std::size_t size, Out& out) {
    cudaMalloc((void**)&out, size);
}

template <typename In, typename Out>
static void CudaWrite_update(In in, std::size_t size, Out& out) {
    cudaMemcpy(in, out, size, cudaMemcpyDeviceToHost);
}

template <typename In, typename Out>
static void CudaWrite_destruct(In in, std::size_t size, Out& out) {
    cudaFree(out);
}

// ---- persistent state ----

static struct cusparse_spmv_state {
    cusparseHandle_t handle;
    cusparseMatDescr_t descr;
    lilac::MarshalObject<int> m_nnz;
    lilac::MarshalObject<int> m_cols;
    lilac::MarshalObject<DeviceArray<int>> m_cuRowstr;
    lilac::MarshalObject<DeviceArray<int>> m_cuColidx;
    lilac::MarshalObject<DeviceArray<double>> m_cuVal;
    lilac::MarshalObject<DeviceArray<double>> m_cuX;
    lilac::MarshalObject<DeviceArray<double>> m_cuOut;
    bool first_run_done = false;
} state;

// ---- entry point ----

extern "C" void cusparse_spmv(std::int64_t rows, double* output, const std::int64_t* row_ptr, const double* val, const double* x, const std::int64_t* col_ind) {
    auto& handle = state.handle;
    auto& descr = state.descr;
    if (!state.first_run_done) {
        state.first_run_done = true;
        {
    cusparseCreate(&handle);
    cusparseCreateMatDescr(&descr);
}
        std::atexit([] {
            auto& handle = state.handle;
            auto& descr = state.descr;
            {
    cusparseDestroyMatDescr(descr);
    cusparseDestroy(handle);
}
            lilac::release_all();
        });
    }
    int nnz = state.m_nnz.acquire(row_ptr, (rows + 1) * sizeof(*row_ptr), LastEntry_construct, LastEntry_update, LastEntry_destruct);
    int cols = state.m_cols.acquire(col_ind, (nnz) * sizeof(*col_ind), ReadableMax_construct, ReadableMax_update, ReadableMax_destruct);
    DeviceArray<int> cuRowstr = state.m_cuRowstr.acquire(row_ptr, (rows + 1) * sizeof(*row_ptr), CudaRead_construct, CudaRead_update, CudaRead_destruct);
    DeviceArray<int> cuColidx = state.m_cuColidx.acquire(col_ind, (nnz) * sizeof(*col_ind), CudaRead_construct, CudaRead_update, CudaRead_destruct);
    DeviceArray<double> cuVal = state.m_cuVal.acquire(val, (nnz) * sizeof(*val), CudaRead_construct, CudaRead_update, CudaRead_destruct);
    DeviceArray<double> cuX = state.m_cuX.acquire(x, (cols) * sizeof(*x), CudaRead_construct, CudaRead_update, CudaRead_destruct);
    DeviceArray<double> cuOut = state.m_cuOut.acquire_out(output, (rows) * sizeof(*output), CudaWrite_construct, CudaWrite_update, CudaWrite_destruct);
    {
    double alpha = 1.0, beta = 0.0;
    cusparseDcsrmv(handle, CUSPARSE_OPERATION_NON_TRANSPOSE, rows, cols, nnz,
                   &alpha, descr, cuVal, cuRowstr, cuColidx, cuX, &beta, cuOut);
    cudaDeviceSynchronize();
}
    state.m_cuOut.write_back();
}
