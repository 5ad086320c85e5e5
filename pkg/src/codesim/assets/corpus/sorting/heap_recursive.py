def main(u_arr,size):
    n = len(u_arr)
    for i in range(n // 2 - 1, -1, -1):
        f1(u_arr, i, n)
    for i in range(n - 1, 0, -1):
        u_arr[0], u_arr[i] = u_arr[i], u_arr[0]
        f1(u_arr, 0, i)
    return u_arr

def f1(u_arr, index, heap_size):
    largest = index
    left_index = 2 * index + 1
    right_index = 2 * index + 2
    if left_index < heap_size and u_arr[left_index] > u_arr[largest]:
        largest = left_index

    if right_index < heap_size and u_arr[right_index] > u_arr[largest]:
        largest = right_index

    if largest != index:
        u_arr[largest], u_arr[index] = u_arr[index], u_arr[largest]
        f1(u_arr, largest, heap_size)
