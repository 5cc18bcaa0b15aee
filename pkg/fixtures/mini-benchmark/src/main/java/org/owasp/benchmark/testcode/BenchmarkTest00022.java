package org.owasp.benchmark.testcode;

import java.io.IOException;
import javax.crypto.Cipher;

import javax.servlet.ServletException;
import javax.servlet.annotation.WebServlet;
import javax.servlet.http.HttpServlet;
import javax.servlet.http.HttpServletRequest;
import javax.servlet.http.HttpServletResponse;

@WebServlet(value = "/crypto-00/BenchmarkTest00022")
public class BenchmarkTest00022 extends HttpServlet {

    private static final long serialVersionUID = 1L;

    private final java.util.Properties benchprops =
            org.owasp.benchmark.helpers.Utils.loadBenchmarkProperties();

    @Override
    public void doGet(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        doPost(request, response);
    }

    @Override
    public void doPost(HttpServletRequest request, HttpServletResponse response)
            throws ServletException, IOException {
        response.setContentType("text/html;charset=UTF-8");

        javax.crypto.SecretKey key = org.owasp.benchmark.helpers.CryptoHelper.generateDesKey();
        String param = request.getParameter("ssn") + request.getParameter("dob");
        Cipher desCipher = Cipher.getInstance("DES/ECB/PKCS5Padding");
        desCipher.init(Cipher.ENCRYPT_MODE, key);
        byte[] sealed = desCipher.doFinal(param.getBytes());
        response.getWriter().println("bytes=" + sealed.length);
    }
}
